"""Baseline pruning strategies: the points of comparison for adaptive NMS.

All of them pick ``retained_count(keep_fraction, n)`` tokens.  Score-ranked
baselines rank raw scores unless the Gaussian correction is switched on
explicitly; none of them perform suppression, so ``final_scores`` simply
echoes whatever scores the ranking used.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from .correction import gaussian_correction
from .select import adaptprune_select
from .types import PruneConfig, PruneResult, TokenGrid


def _working_scores(grid: TokenGrid, cfg: PruneConfig) -> np.ndarray:
    if cfg.gaussian_enabled:
        return gaussian_correction(grid, cfg.gaussian_sigma)
    return grid.scores.astype(np.float64)


def _rank_desc(scores: np.ndarray) -> np.ndarray:
    # stable sort on negated scores: descending, ties to the lowest index
    return np.argsort(-scores, kind="stable")


def _top_n(scores: np.ndarray, n_keep: int) -> list[int]:
    return [int(i) for i in _rank_desc(scores)[:n_keep]]


def _iter_cells(grid: TokenGrid):
    """Token indices of each 3x3 spatial cell, sub-images in order, cells
    row-major; partial edge cells included, empty cells skipped."""
    for s, (_, w) in enumerate(grid.grid_dims):
        members = np.nonzero(grid.subimage_ids == s)[0]
        if members.size == 0:
            continue
        n_cell_cols = (w + 2) // 3
        cell_of = (grid.positions[members, 0] // 3) * n_cell_cols + grid.positions[members, 1] // 3
        for cid in np.unique(cell_of):
            yield members[cell_of == cid]


def _fill_to_n(picked: list[int], scores: np.ndarray, n_keep: int) -> list[int]:
    """Extend a pick list with the highest-scoring unpicked tokens."""
    if len(picked) >= n_keep:
        return picked[:n_keep]
    used = set(picked)
    for idx in _rank_desc(scores):
        if len(picked) == n_keep:
            break
        if int(idx) not in used:
            picked.append(int(idx))
    return picked


def _cell_pick_select(grid: TokenGrid, work: np.ndarray, n_keep: int, pick) -> list[int]:
    pick_set = {pick(cell) for cell in _iter_cells(grid)}
    ranked = [int(i) for i in _rank_desc(work) if int(i) in pick_set][:n_keep]
    return _fill_to_n(ranked, work, n_keep)


def baseline_select(grid: TokenGrid, config: PruneConfig) -> PruneResult:
    """Select tokens with the configured non-adaptive strategy.

    Strategies
    ----------
    fastv_topk
        Top-N scores, ties to the lowest index.
    skip
        Every other token from the top 2N score ranks; if that runs dry
        (keep_fraction > 0.5), filled from the remaining ranks in order.
    random
        Uniform sample of N tokens without replacement (seed required).
    random_3x3 / maxpool_3x3
        One token per 3x3 spatial cell (uniform pick / max score), then the
        top-N picks by score; filled with the best unpicked tokens when the
        grid has fewer cells than N.
    avgpool_3x3
        Each token rescored by the mean over its 3x3 neighborhood (tokens
        present in the in-bounds window), then top-N.
    fitprune_single
        Top-N of cross_attention * self_attention from the extended dump
        channels.
    last_fraction
        The last N tokens in raster order (sub-image, then row, then col).
    """
    cfg = config.resolved()
    if cfg.strategy == "adaptprune":
        raise ValidationError("strategy: baseline_select does not run 'adaptprune'")
    n = grid.n_tokens
    n_keep = cfg.retained_count(n)
    work = _working_scores(grid, cfg)

    if cfg.strategy == "fastv_topk":
        retained = _top_n(work, n_keep)

    elif cfg.strategy == "skip":
        order = _rank_desc(work)
        pool = order[: min(2 * n_keep, n)]
        retained = _fill_to_n([int(i) for i in pool[0::2][:n_keep]], work, n_keep)

    elif cfg.strategy == "random":
        rng = np.random.default_rng(cfg.seed)
        retained = [int(i) for i in rng.choice(n, size=n_keep, replace=False)]

    elif cfg.strategy == "random_3x3":
        rng = np.random.default_rng(cfg.seed)
        retained = _cell_pick_select(
            grid, work, n_keep, lambda cell: int(cell[rng.integers(cell.size)])
        )

    elif cfg.strategy == "maxpool_3x3":
        retained = _cell_pick_select(
            grid, work, n_keep, lambda cell: int(cell[np.argmax(work[cell])])
        )

    elif cfg.strategy == "avgpool_3x3":
        pooled = _avgpool_scores(grid, work)
        retained = _top_n(pooled, n_keep)
        work = pooled

    elif cfg.strategy == "fitprune_single":
        if not grid.has_extended_scores:
            raise ValidationError(
                "cross_attention/self_attention: fitprune_single requires the extended score channels"
            )
        work = grid.cross_attention.astype(np.float64) * grid.self_attention.astype(np.float64)
        retained = _top_n(work, n_keep)

    elif cfg.strategy == "last_fraction":
        raster = np.lexsort((grid.positions[:, 1], grid.positions[:, 0], grid.subimage_ids))
        retained = [int(i) for i in raster[n - n_keep :]]

    else:  # pragma: no cover - PruneConfig already validates the name
        raise ValidationError(f"strategy: unknown strategy {cfg.strategy!r}")

    return PruneResult(retained=retained, final_scores=work, trace=None)


def _avgpool_scores(grid: TokenGrid, work: np.ndarray) -> np.ndarray:
    by_pos: list[dict[tuple[int, int], int]] = [{} for _ in grid.grid_dims]
    for idx in range(grid.n_tokens):
        r, c = grid.positions[idx]
        by_pos[grid.subimage_ids[idx]][(int(r), int(c))] = idx
    pooled = np.empty(grid.n_tokens, dtype=np.float64)
    for idx in range(grid.n_tokens):
        s = int(grid.subimage_ids[idx])
        h, w = grid.grid_dims[s]
        r, c = (int(v) for v in grid.positions[idx])
        acc = 0.0
        cnt = 0
        for rr in range(max(r - 1, 0), min(r + 2, h)):
            for cc in range(max(c - 1, 0), min(c + 2, w)):
                j = by_pos[s].get((rr, cc))
                if j is not None:
                    acc += work[j]
                    cnt += 1
        pooled[idx] = acc / cnt
    return pooled


def select(grid: TokenGrid, config: PruneConfig, trace: bool = False) -> PruneResult:
    """Dispatch to adaptprune_select or baseline_select by config.strategy."""
    if config.strategy == "adaptprune":
        return adaptprune_select(grid, config, trace=trace)
    return baseline_select(grid, config)
