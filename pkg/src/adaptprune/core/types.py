"""Domain types shared by every stage of the pruning engine.

A :class:`TokenGrid` is one image's worth of visual tokens: the attention
mass each token received, its (row, col) patch position, its key vector, and
the tile (sub-image) it belongs to.  High-resolution models encode several
tiles per image; tokens of different tiles live in independent coordinate
frames and suppression never crosses tile boundaries.

Storage is 32-bit (matching the on-disk dump format); all score arithmetic
is carried out in 64-bit by the selection code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ValidationError

AUTO = "auto"

STRATEGIES = (
    "adaptprune",
    "fastv_topk",
    "fitprune_single",
    "skip",
    "random",
    "random_3x3",
    "maxpool_3x3",
    "avgpool_3x3",
    "last_fraction",
)

RANDOMIZED_STRATEGIES = ("random", "random_3x3")


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass
class TokenGrid:
    """Per-token data for one image.

    Parameters
    ----------
    scores : array of shape (n,)
        Nonnegative attention mass received by each token.
    positions : array of shape (n, 2)
        Integer (row, col) patch coordinates, local to the token's sub-image.
    keys : array of shape (n, key_dim)
        Key vectors used for similarity suppression.
    subimage_ids : array of shape (n,)
        Tile label per token; indexes into ``grid_dims``.
    grid_dims : sequence of (H, W)
        Patch-grid height and width of each sub-image.
    cross_attention, self_attention : optional arrays of shape (n,)
        Extended score channels carried by some dumps; required by the
        ``fitprune_single`` strategy and ignored elsewhere.
    """

    scores: np.ndarray
    positions: np.ndarray
    keys: np.ndarray
    subimage_ids: np.ndarray
    grid_dims: tuple[tuple[int, int], ...]
    cross_attention: np.ndarray | None = None
    self_attention: np.ndarray | None = None

    def __post_init__(self):
        self.scores = _frozen(np.atleast_1d(self.scores), np.float32)
        self.positions = _frozen(self.positions, np.int32)
        self.keys = _frozen(np.atleast_2d(self.keys), np.float32)
        self.subimage_ids = _frozen(np.atleast_1d(self.subimage_ids), np.int32)
        self.grid_dims = tuple((int(h), int(w)) for h, w in self.grid_dims)
        if self.cross_attention is not None:
            self.cross_attention = _frozen(np.atleast_1d(self.cross_attention), np.float32)
        if self.self_attention is not None:
            self.self_attention = _frozen(np.atleast_1d(self.self_attention), np.float32)
        self.validate()

    @property
    def n_tokens(self) -> int:
        return self.scores.shape[0]

    @property
    def key_dim(self) -> int:
        return self.keys.shape[1]

    @property
    def n_subimages(self) -> int:
        return len(self.grid_dims)

    @property
    def has_extended_scores(self) -> bool:
        return self.cross_attention is not None and self.self_attention is not None

    def validate(self) -> None:
        n = self.n_tokens
        if n < 1:
            raise ValidationError("scores: grid must contain at least one token")
        if self.scores.ndim != 1:
            raise ValidationError("scores: expected a 1-D array")
        if not np.all(np.isfinite(self.scores)):
            raise ValidationError("scores: non-finite value")
        if np.any(self.scores < 0):
            raise ValidationError("scores: negative value")
        if self.positions.shape != (n, 2):
            raise ValidationError(f"positions: expected shape ({n}, 2), got {self.positions.shape}")
        if self.keys.ndim != 2 or self.keys.shape[0] != n:
            raise ValidationError(f"keys: expected shape ({n}, key_dim), got {self.keys.shape}")
        if self.keys.shape[1] < 1:
            raise ValidationError("keys: key_dim must be >= 1")
        if not np.all(np.isfinite(self.keys)):
            raise ValidationError("keys: non-finite value")
        if self.subimage_ids.shape != (n,):
            raise ValidationError(f"subimage_ids: expected shape ({n},), got {self.subimage_ids.shape}")
        if not self.grid_dims:
            raise ValidationError("grid_dims: at least one sub-image required")
        for s, (h, w) in enumerate(self.grid_dims):
            if h < 1 or w < 1:
                raise ValidationError(f"grid_dims: sub-image {s} has non-positive dims ({h}, {w})")
        if np.any(self.subimage_ids < 0) or np.any(self.subimage_ids >= self.n_subimages):
            raise ValidationError("subimage_ids: label outside [0, n_subimages)")
        for s in range(self.n_subimages):
            members = np.nonzero(self.subimage_ids == s)[0]
            if members.size == 0:
                continue
            h, w = self.grid_dims[s]
            pos = self.positions[members]
            if np.any(pos[:, 0] < 0) or np.any(pos[:, 0] >= h) or np.any(pos[:, 1] < 0) or np.any(pos[:, 1] >= w):
                raise ValidationError(f"positions: token outside sub-image {s} bounds ({h}, {w})")
            flat = pos[:, 0].astype(np.int64) * w + pos[:, 1]
            if np.unique(flat).size != flat.size:
                raise ValidationError(f"positions: duplicate position within sub-image {s}")
        for name, arr in (("cross_attention", self.cross_attention), ("self_attention", self.self_attention)):
            if arr is None:
                continue
            if arr.shape != (n,):
                raise ValidationError(f"{name}: expected shape ({n},), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name}: non-finite value")
        if (self.cross_attention is None) != (self.self_attention is None):
            raise ValidationError("cross_attention/self_attention: extended scores must come as a pair")


def retained_count(keep_fraction: float, n_tokens: int) -> int:
    """Number of tokens kept: half-up rounding of keep_fraction * n, floor 1."""
    return max(1, int(math.floor(keep_fraction * n_tokens + 0.5)))


@dataclass(frozen=True)
class PruneConfig:
    """All algorithm knobs.

    ``gaussian_enabled`` / ``similarity_enabled`` are tri-state: ``None``
    resolves to the strategy's own default (on for ``adaptprune``, off for
    every baseline, so ``fastv_topk`` ranks raw scores unless the correction
    is requested explicitly).  ``cutoff_multiplier`` bounds the suppression
    neighborhood at ``cutoff_multiplier * sigma_d`` patches; ``math.inf``
    disables the bound.
    """

    sigma_d: float = 2.0
    sigma_s: float = 0.5
    keep_fraction: float = 0.1
    gaussian_sigma: float | str = AUTO
    gaussian_enabled: bool | None = None
    similarity_enabled: bool | None = None
    cutoff_multiplier: float = 3.0
    strategy: str = "adaptprune"
    seed: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"strategy: unknown strategy {self.strategy!r}; valid: {', '.join(STRATEGIES)}"
            )
        for name in ("sigma_d", "sigma_s"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"{name}: must be a positive finite real")
        if self.gaussian_sigma != AUTO:
            v = self.gaussian_sigma
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError("gaussian_sigma: must be a positive finite real or 'auto'")
        if not (0 < self.keep_fraction <= 1):
            raise ValidationError("keep_fraction: must lie in (0, 1]")
        if math.isnan(self.cutoff_multiplier) or self.cutoff_multiplier <= 0:
            raise ValidationError("cutoff_multiplier: must be a positive real (math.inf disables the bound)")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ValidationError("seed: must be a nonnegative integer")
        if self.strategy in RANDOMIZED_STRATEGIES and self.seed is None:
            raise ValidationError(f"seed: strategy {self.strategy!r} requires an explicit seed")

    def resolved(self) -> "PruneConfig":
        """Return a copy with the tri-state toggles pinned to booleans."""
        own = self.strategy == "adaptprune"
        g = own if self.gaussian_enabled is None else self.gaussian_enabled
        s = own if self.similarity_enabled is None else self.similarity_enabled
        return replace(self, gaussian_enabled=g, similarity_enabled=s)

    def retained_count(self, n_tokens: int) -> int:
        return retained_count(self.keep_fraction, n_tokens)


@dataclass
class PruneResult:
    """Outcome of one selection run.

    ``retained`` lists token indices in selection order.  ``final_scores``
    holds every token's working score at termination; a selected token's
    entry is frozen at its selection-time value.  ``trace`` (optional) logs
    one ``(iteration, selected_index, n_scores_changed)`` tuple per loop
    iteration.
    """

    retained: list[int]
    final_scores: np.ndarray
    trace: list[tuple[int, int, int]] | None = field(default=None, repr=False)
