"""Cross-dump attention aggregation.

Averaging many per-image attention fields over a shared patch grid exposes
the positional bias that motivates score correction: the mean lights up in
a fixed pattern regardless of content.  The aggregate is a streaming mean,
so arbitrarily many dumps fit in constant memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..core.types import TokenGrid
from ..errors import ValidationError


@dataclass
class AttentionAggregate:
    """Running per-position mean over single-tile dumps of one grid shape.

    Positions a dump does not cover contribute 0 to that dump's field.
    Single writer while aggregating; read-only afterwards.
    """

    grid_dims: tuple[int, int]
    mean_scores: np.ndarray = field(init=False)
    sample_count: int = field(init=False, default=0)

    def __post_init__(self):
        h, w = self.grid_dims
        if h < 1 or w < 1:
            raise ValidationError("grid_dims: non-positive dims")
        self.grid_dims = (int(h), int(w))
        self.mean_scores = np.zeros((h, w), dtype=np.float64)

    def add(self, grid: TokenGrid) -> None:
        if grid.n_subimages != 1:
            raise ValidationError("grid_dims: aggregation requires single-sub-image dumps")
        if grid.grid_dims[0] != self.grid_dims:
            raise ValidationError(
                f"grid_dims: dump has {grid.grid_dims[0]}, aggregate holds {self.grid_dims}"
            )
        h, w = self.grid_dims
        current = np.zeros((h, w), dtype=np.float64)
        current[grid.positions[:, 0], grid.positions[:, 1]] = grid.scores.astype(np.float64)
        self.sample_count += 1
        self.mean_scores += (current - self.mean_scores) / self.sample_count


def aggregate_attention(dumps: Iterable[TokenGrid]) -> AttentionAggregate:
    """Fold an iterable of dumps into one AttentionAggregate."""
    agg: AttentionAggregate | None = None
    for grid in dumps:
        if agg is None:
            if grid.n_subimages != 1:
                raise ValidationError("grid_dims: aggregation requires single-sub-image dumps")
            agg = AttentionAggregate(grid.grid_dims[0])
        agg.add(grid)
    if agg is None:
        raise ValidationError("dumps: nothing to aggregate")
    return agg
