"""Brute-force reference selection for differential testing.

This is a deliberate re-implementation of the greedy suppression loop in
plain Python: full rescan for every argmax, per-pair cosine computed from
scratch, no caching, no radius bound.  It shares no selection code with
``core.select``, which is the point; the fast path is checked against this
one, never the other way around.

The one semantic difference from core is the missing cutoff: the reference
suppresses every unselected token of the selected token's sub-image, however
far away.  ``cutoff_discrepancy`` measures what core's finite cutoff costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core.types import AUTO, PruneConfig, PruneResult, TokenGrid


def _cosine(a, b) -> float:
    dot = 0.0
    na = 0.0
    nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (math.sqrt(na) * math.sqrt(nb))


def reference_select(grid: TokenGrid, config: PruneConfig) -> PruneResult:
    """Literal greedy loop: argmax by rescan, suppress all same-tile tokens."""
    cfg = config.resolved()
    n = grid.n_tokens
    n_keep = cfg.retained_count(n)

    scores = [float(x) for x in grid.scores]
    rows = [int(p) for p in grid.positions[:, 0]]
    cols = [int(p) for p in grid.positions[:, 1]]
    subs = [int(s) for s in grid.subimage_ids]
    keys = [[float(v) for v in row] for row in grid.keys]

    if cfg.gaussian_enabled:
        for i in range(n):
            h, w = grid.grid_dims[subs[i]]
            sig = max(h, w) / 3.0 if cfg.gaussian_sigma == AUTO else float(cfg.gaussian_sigma)
            dr = rows[i] - (h - 1) / 2.0
            dc = cols[i] - (w - 1) / 2.0
            scores[i] *= math.exp(-(dr * dr + dc * dc) / (2.0 * sig * sig))

    selected = [False] * n
    retained: list[int] = []
    while len(retained) < n_keep:
        best = -1
        best_score = -math.inf
        for j in range(n):
            if not selected[j] and scores[j] > best_score:
                best = j
                best_score = scores[j]
        selected[best] = True
        retained.append(best)
        for j in range(n):
            if selected[j] or subs[j] != subs[best]:
                continue
            dr = rows[j] - rows[best]
            dc = cols[j] - cols[best]
            dist = math.sqrt(dr * dr + dc * dc)
            d_spatial = math.exp(-(dist * dist) / (2.0 * cfg.sigma_d * cfg.sigma_d))
            if cfg.similarity_enabled:
                gap = 1.0 - _cosine(keys[best], keys[j])
                d_sim = math.exp(-(gap * gap) / (2.0 * cfg.sigma_s * cfg.sigma_s))
            else:
                d_sim = 1.0
            scores[j] *= 1.0 - d_spatial * d_sim

    return PruneResult(retained=retained, final_scores=np.asarray(scores, dtype=np.float64), trace=None)


@dataclass(frozen=True)
class DiscrepancyReport:
    """How far core's cutoff-bounded run strays from the reference."""

    n_retained: int
    differing_indices: int
    max_rel_score_diff: float


def cutoff_discrepancy(grid: TokenGrid, config: PruneConfig) -> DiscrepancyReport:
    """Run core (cutoff as configured) and the reference (no cutoff) and
    report the retained-set disagreement plus the worst relative
    final-score difference."""
    from .core.select import adaptprune_select

    fast = adaptprune_select(grid, config)
    ref = reference_select(grid, config)
    differing = len(set(fast.retained) - set(ref.retained))
    a = np.abs(fast.final_scores)
    b = np.abs(ref.final_scores)
    denom = np.maximum(np.maximum(a, b), 1e-300)
    rel = float(np.max(np.abs(fast.final_scores - ref.final_scores) / denom))
    return DiscrepancyReport(
        n_retained=len(ref.retained), differing_indices=differing, max_rel_score_diff=rel
    )
