"""Quality metrics over a retained token set.

These quantify what a pruning run kept: how spread out the surviving tokens
are (dispersion), how mutually similar their keys are (redundancy), and how
much of the raw attention mass survived (score_mass).  They are this
artifact's own instruments, defined here, not taken from elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.decay import cosine_similarity
from ..core.types import TokenGrid
from ..errors import ValidationError


@dataclass(frozen=True)
class RetainedSetMetrics:
    """dispersion: mean pairwise Euclidean distance between retained
    positions, in patch units.  redundancy: mean over retained tokens of the
    max cosine similarity to any other retained token.  score_mass: retained
    share of total raw score.  position_centroid: mean (row, col)."""

    dispersion: float
    redundancy: float
    score_mass: float
    position_centroid: tuple[float, float]


def compute_metrics(grid: TokenGrid, retained: Sequence[int]) -> RetainedSetMetrics:
    """Score a retained set.

    A single retained token has no peers, so dispersion and redundancy are
    both 0.  Positions are compared in raw (row, col) coordinates even
    across sub-images.  An all-zero-score grid yields score_mass 0.
    """
    if len(retained) == 0:
        raise ValidationError("retained: empty index list")
    idx = np.asarray(retained, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= grid.n_tokens):
        raise ValidationError("retained: index out of range")
    if np.unique(idx).size != idx.size:
        raise ValidationError("retained: duplicate index")

    pos = grid.positions[idx].astype(np.float64)
    k = idx.size
    if k == 1:
        dispersion = 0.0
        redundancy = 0.0
    else:
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        dispersion = float(np.sum(dist) / (k * (k - 1)))
        cos = cosine_similarity(grid.keys[idx][:, None, :], grid.keys[idx][None, :, :])
        np.fill_diagonal(cos, -np.inf)
        redundancy = float(np.mean(np.max(cos, axis=1)))

    total = float(np.sum(grid.scores.astype(np.float64)))
    mass = float(np.sum(grid.scores[idx].astype(np.float64)))
    score_mass = mass / total if total > 0 else 0.0

    centroid = (float(np.mean(pos[:, 0])), float(np.mean(pos[:, 1])))
    return RetainedSetMetrics(
        dispersion=dispersion,
        redundancy=redundancy,
        score_mass=score_mass,
        position_centroid=centroid,
    )
