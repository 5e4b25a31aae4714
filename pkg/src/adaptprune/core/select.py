"""Greedy adaptive non-maximum suppression over attention scores.

Each round picks the highest-scoring unselected token, then discounts every
unselected token of the same sub-image by 1 - D_spatial * D_similarity, so
tokens that are both close to and redundant with an already-kept token lose
standing.  Scores of selected tokens are frozen; they never get suppressed
after selection.
"""

from __future__ import annotations

import numpy as np

from .correction import gaussian_correction
from .decay import similarity_decay, spatial_decay
from .types import PruneConfig, PruneResult, TokenGrid


def adaptprune_select(grid: TokenGrid, config: PruneConfig, trace: bool = False) -> PruneResult:
    """Run the adaptive NMS loop and return the retained token set.

    Parameters
    ----------
    grid : TokenGrid
        Tokens to prune.
    config : PruneConfig
        Knobs; tri-state toggles are resolved here, so ``None`` means
        "whatever the configured strategy defaults to".
    trace : bool
        Record one (iteration, selected index, scores changed) entry per
        round in the result.

    Notes
    -----
    Suppression only reaches unselected tokens of the selected token's own
    sub-image within ``cutoff_multiplier * sigma_d`` patches (the argmax is
    global).  All arithmetic is float64 regardless of storage dtype.
    """
    cfg = config.resolved()
    n = grid.n_tokens
    n_keep = cfg.retained_count(n)

    if cfg.gaussian_enabled:
        work = gaussian_correction(grid, cfg.gaussian_sigma)
    else:
        work = grid.scores.astype(np.float64)

    rows = grid.positions[:, 0].astype(np.float64)
    cols = grid.positions[:, 1].astype(np.float64)
    subs = grid.subimage_ids

    keys = grid.keys.astype(np.float64)
    norms = np.linalg.norm(keys, axis=1)
    # zero-norm keys get a zero unit row: cosine 0 against everything
    unit = np.divide(keys, norms[:, None], out=np.zeros_like(keys), where=norms[:, None] != 0)

    cutoff_sq = (cfg.cutoff_multiplier * cfg.sigma_d) ** 2

    live = work.copy()
    open_ = np.ones(n, dtype=bool)
    retained: list[int] = []
    frozen = np.empty(n_keep, dtype=np.float64)
    trace_log: list[tuple[int, int, int]] | None = [] if trace else None

    for it in range(n_keep):
        i = int(np.argmax(live))  # ties break to the lowest index
        retained.append(i)
        frozen[it] = live[i]
        live[i] = -np.inf
        open_[i] = False

        changed = 0
        cand = np.nonzero(open_ & (subs == subs[i]))[0]
        if cand.size:
            dsq = (rows[cand] - rows[i]) ** 2 + (cols[cand] - cols[i]) ** 2
            near = dsq <= cutoff_sq
            if np.any(near):
                idx = cand[near]
                d_spatial = spatial_decay(np.sqrt(dsq[near]), cfg.sigma_d)
                if cfg.similarity_enabled:
                    d_sim = similarity_decay(unit[idx] @ unit[i], cfg.sigma_s)
                else:
                    d_sim = 1.0
                before = live[idx]
                after = before * (1.0 - d_spatial * d_sim)
                if trace_log is not None:
                    changed = int(np.count_nonzero(after != before))
                live[idx] = after
        if trace_log is not None:
            trace_log.append((it, i, changed))

    final = live
    for t, i in enumerate(retained):
        final[i] = frozen[t]
    return PruneResult(retained=retained, final_scores=final, trace=trace_log)
