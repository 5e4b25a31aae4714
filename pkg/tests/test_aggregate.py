import numpy as np
import pytest

from adaptprune import TokenGrid
from adaptprune.analysis import AttentionAggregate, aggregate_attention
from adaptprune.errors import ValidationError
from adaptprune.synth import BIAS_FLOOR, bias_field, make_biased, make_uniform


def _scaled(grid, factor):
    return TokenGrid(
        scores=grid.scores * np.float32(factor),
        positions=grid.positions,
        keys=grid.keys,
        subimage_ids=grid.subimage_ids,
        grid_dims=grid.grid_dims,
    )


def _field(grid):
    h, w = grid.grid_dims[0]
    out = np.zeros((h, w))
    out[grid.positions[:, 0], grid.positions[:, 1]] = grid.scores
    return out


class TestAttentionAggregate:
    def test_single_dump_identity(self):
        g = make_uniform(3, 5, 2, np.random.default_rng(0))
        agg = aggregate_attention([g])
        assert agg.sample_count == 1
        assert agg.grid_dims == (3, 5)
        np.testing.assert_allclose(agg.mean_scores, _field(g), rtol=1e-12)

    def test_mean_of_scaled_pair(self):
        g = make_uniform(4, 4, 2, np.random.default_rng(1))
        agg = aggregate_attention([g, _scaled(g, 3.0)])
        assert agg.sample_count == 2
        np.testing.assert_allclose(agg.mean_scores, 2.0 * _field(g), rtol=1e-6)

    def test_absent_positions_count_as_zero(self):
        g = TokenGrid(
            scores=np.array([1.0], dtype=np.float32),
            positions=np.array([[0, 0]], dtype=np.int32),
            keys=np.ones((1, 1), dtype=np.float32),
            subimage_ids=np.zeros(1, dtype=np.int32),
            grid_dims=[(1, 2)],
        )
        agg = aggregate_attention([g, g])
        np.testing.assert_allclose(agg.mean_scores, [[1.0, 0.0]])

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(2)
        a = make_uniform(3, 3, 2, rng)
        b = make_uniform(3, 4, 2, rng)
        with pytest.raises(ValidationError, match="grid_dims"):
            aggregate_attention([a, b])

    def test_multi_subimage_dump_rejected(self):
        g = TokenGrid(
            scores=np.array([1.0, 1.0], dtype=np.float32),
            positions=np.zeros((2, 2), dtype=np.int32),
            keys=np.ones((2, 1), dtype=np.float32),
            subimage_ids=np.array([0, 1], dtype=np.int32),
            grid_dims=[(1, 1), (1, 1)],
        )
        agg = AttentionAggregate((1, 1))
        with pytest.raises(ValidationError, match="single-sub-image"):
            agg.add(g)

    def test_empty_iterable_rejected(self):
        with pytest.raises(ValidationError, match="nothing to aggregate"):
            aggregate_attention([])

    def test_streaming_mean_matches_batch_mean(self):
        rng = np.random.default_rng(3)
        dumps = [make_uniform(5, 7, 2, rng) for _ in range(23)]
        agg = aggregate_attention(dumps)
        batch = np.mean([_field(g) for g in dumps], axis=0)
        np.testing.assert_allclose(agg.mean_scores, batch, rtol=0, atol=1e-9)

    def test_order_independence(self):
        rng = np.random.default_rng(4)
        dumps = [make_uniform(4, 4, 2, rng) for _ in range(9)]
        fwd = aggregate_attention(dumps).mean_scores
        rev = aggregate_attention(dumps[::-1]).mean_scores
        np.testing.assert_allclose(fwd, rev, rtol=0, atol=1e-9)


class TestBiasRecovery:
    def test_mean_over_biased_dumps_recovers_planted_field(self):
        # 1000 dumps of multiplicative U(0.5, 1.0) noise over a fixed corner
        # bump: the sample mean should sit within sampling error of
        # 0.75 * field.  Tolerance is 5 standard errors because the check
        # runs at every one of the 256 positions.
        rng = np.random.default_rng(123)
        h = w = 16
        n_samples = 1000
        agg = aggregate_attention(make_biased(h, w, 4, rng) for _ in range(n_samples))
        field = bias_field(h, w)

        expected = 0.75 * field
        # noise std of U(0.5,1.0) is 1/(4*sqrt(3)) per sample
        stderr = field / (4.0 * np.sqrt(3.0)) / np.sqrt(n_samples)
        deviation = np.abs(agg.mean_scores - expected)
        assert np.all(deviation <= 5.0 * stderr)

        peak = np.unravel_index(np.argmax(agg.mean_scores), (h, w))
        assert peak == (h - 1, w - 1)
        assert float(np.min(field)) >= BIAS_FLOOR
