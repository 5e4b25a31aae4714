"""Synthetic token-grid generators for testing and demos.

Three presets, all full single-tile rasters in row-major token order:

uniform
    i.i.d. scores in [0, 1), isotropic random unit keys.
clustered
    One 3x3 block of top scores (0.85..1.0) with near-identical keys,
    everything else mid-score (0.2..0.55) with independent keys.  The
    redundant-hotspot scenario: score ranking alone drowns in the block.
biased
    Scores modulated by a fixed Gaussian bump at the bottom-right corner
    (floor 0.05, width max(H, W) / 8), emulating the positional skew seen
    in raw attention.  Noise is uniform in [0.5, 1.0), so the planted
    field is recoverable from a few hundred samples.
"""

from __future__ import annotations

import numpy as np

from .core.types import TokenGrid
from .errors import ValidationError

PRESETS = ("uniform", "clustered", "biased")

BIAS_FLOOR = 0.05
BIAS_SIGMA_DIVISOR = 8.0


def _raster(h: int, w: int) -> np.ndarray:
    rows, cols = np.divmod(np.arange(h * w), w)
    return np.stack([rows, cols], axis=1).astype(np.int32)


def _unit_keys(rng: np.random.Generator, n: int, key_dim: int) -> np.ndarray:
    keys = rng.normal(size=(n, key_dim))
    norms = np.linalg.norm(keys, axis=1, keepdims=True)
    return np.divide(keys, norms, out=np.zeros_like(keys), where=norms != 0)


def _grid(h, w, scores, keys) -> TokenGrid:
    return TokenGrid(
        scores=scores,
        positions=_raster(h, w),
        keys=keys,
        subimage_ids=np.zeros(h * w, dtype=np.int32),
        grid_dims=((h, w),),
    )


def make_uniform(h: int, w: int, key_dim: int, rng: np.random.Generator) -> TokenGrid:
    return _grid(h, w, rng.random(h * w), _unit_keys(rng, h * w, key_dim))


def make_clustered(h: int, w: int, key_dim: int, rng: np.random.Generator) -> TokenGrid:
    if h < 3 or w < 3:
        raise ValidationError("grid_dims: clustered preset needs at least a 3x3 grid")
    n = h * w
    scores = rng.uniform(0.2, 0.55, size=n)
    keys = _unit_keys(rng, n, key_dim)

    r0 = int(rng.integers(h - 2))
    c0 = int(rng.integers(w - 2))
    anchor = _unit_keys(rng, 1, key_dim)[0]
    for rr in range(r0, r0 + 3):
        for cc in range(c0, c0 + 3):
            i = rr * w + cc
            scores[i] = rng.uniform(0.85, 1.0)
            jittered = anchor + rng.normal(scale=0.01, size=key_dim)
            keys[i] = jittered / np.linalg.norm(jittered)
    return _grid(h, w, scores, keys)


def bias_field(h: int, w: int) -> np.ndarray:
    """The planted positional field: Gaussian bump at (h-1, w-1)."""
    sigma = max(h, w) / BIAS_SIGMA_DIVISOR
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    dsq = (rows - (h - 1)) ** 2 + (cols - (w - 1)) ** 2
    return BIAS_FLOOR + (1.0 - BIAS_FLOOR) * np.exp(-dsq / (2.0 * sigma * sigma))


def make_biased(h: int, w: int, key_dim: int, rng: np.random.Generator) -> TokenGrid:
    noise = rng.uniform(0.5, 1.0, size=h * w)
    scores = noise * bias_field(h, w).reshape(-1)
    return _grid(h, w, scores, _unit_keys(rng, h * w, key_dim))


def make_mixed(rng: np.random.Generator, max_tokens: int = 200, max_key_dim: int = 16) -> TokenGrid:
    """Adversarial random grid for differential testing: 1-3 sub-images of
    random dims, sparse token subsets, shuffled token order, and the odd
    all-zero key row.  Scores are continuous, so exact ties have measure
    zero."""
    n_sub = int(rng.integers(1, 4))
    dims = [(int(rng.integers(2, 13)), int(rng.integers(2, 13))) for _ in range(n_sub)]
    key_dim = int(rng.integers(1, max_key_dim + 1))

    positions: list[tuple[int, int]] = []
    sub_ids: list[int] = []
    budget = max_tokens
    for s, (h, w) in enumerate(dims):
        cap = min(h * w, budget - (n_sub - s - 1))
        count = int(rng.integers(1, cap + 1))
        budget -= count
        for flat in sorted(rng.choice(h * w, size=count, replace=False).tolist()):
            positions.append((flat // w, flat % w))
            sub_ids.append(s)

    n = len(positions)
    scores = rng.random(n)
    keys = rng.normal(size=(n, key_dim))
    keys[rng.random(n) < 0.02] = 0.0

    perm = rng.permutation(n)
    return TokenGrid(
        scores=scores[perm],
        positions=np.asarray(positions, dtype=np.int32)[perm],
        keys=keys[perm],
        subimage_ids=np.asarray(sub_ids, dtype=np.int32)[perm],
        grid_dims=tuple(dims),
    )


_MAKERS = {"uniform": make_uniform, "clustered": make_clustered, "biased": make_biased}


def generate(preset: str, h: int, w: int, key_dim: int, count: int, seed: int):
    """Yield ``count`` grids from one seeded stream (same seed, same bytes)."""
    if preset not in PRESETS:
        raise ValidationError(f"preset: unknown preset {preset!r}; valid: {', '.join(PRESETS)}")
    rng = np.random.default_rng(seed)
    make = _MAKERS[preset]
    for _ in range(count):
        yield make(h, w, key_dim, rng)
