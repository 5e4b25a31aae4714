import numpy as np
import pytest

from adaptprune import TokenGrid
from adaptprune.analysis import compute_metrics
from adaptprune.errors import ValidationError


def _line_grid():
    return TokenGrid(
        scores=np.array([0.4, 0.3, 0.2, 0.1], dtype=np.float32),
        positions=np.array([[0, 0], [0, 1], [0, 2], [0, 3]], dtype=np.int32),
        keys=np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=np.float32),
        subimage_ids=np.zeros(4, dtype=np.int32),
        grid_dims=[(1, 4)],
    )


class TestComputeMetrics:
    def test_single_token_conventions(self):
        m = compute_metrics(_line_grid(), [2])
        assert m.dispersion == 0.0
        assert m.redundancy == 0.0
        assert m.score_mass == pytest.approx(0.2, rel=1e-6)
        assert m.position_centroid == pytest.approx((0.0, 2.0))

    def test_two_token_hand_values(self):
        # tokens at (0,0) and (0,3): one pair, distance 3; orthogonal keys
        m = compute_metrics(_line_grid(), [0, 3])
        assert m.dispersion == pytest.approx(3.0)
        assert m.redundancy == pytest.approx(0.0, abs=1e-12)
        assert m.score_mass == pytest.approx(0.5, rel=1e-6)
        assert m.position_centroid == pytest.approx((0.0, 1.5))

    def test_identical_keys_redundancy_one(self):
        g = TokenGrid(
            scores=np.array([1.0, 1.0], dtype=np.float32),
            positions=np.array([[0, 0], [0, 1]], dtype=np.int32),
            keys=np.array([[3, 4], [3, 4]], dtype=np.float32),
            subimage_ids=np.zeros(2, dtype=np.int32),
            grid_dims=[(1, 2)],
        )
        m = compute_metrics(g, [0, 1])
        assert m.redundancy == pytest.approx(1.0, rel=1e-6)

    def test_full_retention_mass_is_one(self):
        m = compute_metrics(_line_grid(), [0, 1, 2, 3])
        assert m.score_mass == pytest.approx(1.0, rel=1e-6)

    def test_dispersion_averages_all_pairs(self):
        # (0,0), (0,1), (0,2): pair distances 1, 2, 1 -> mean 4/3
        m = compute_metrics(_line_grid(), [0, 1, 2])
        assert m.dispersion == pytest.approx(4.0 / 3.0)

    def test_zero_total_score_mass_convention(self):
        g = TokenGrid(
            scores=np.zeros(2, dtype=np.float32),
            positions=np.array([[0, 0], [0, 1]], dtype=np.int32),
            keys=np.eye(2, dtype=np.float32),
            subimage_ids=np.zeros(2, dtype=np.int32),
            grid_dims=[(1, 2)],
        )
        assert compute_metrics(g, [0]).score_mass == 0.0

    @pytest.mark.parametrize(
        "retained",
        [[], [0, 0], [7], [-1]],
        ids=["empty", "duplicate", "out-of-range", "negative"],
    )
    def test_invalid_retained_sets(self, retained):
        with pytest.raises(ValidationError):
            compute_metrics(_line_grid(), retained)
