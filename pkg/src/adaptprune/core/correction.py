"""Center-weighted score correction.

Raw attention over visual tokens is biased toward tokens that sit late in
the sequence, which after flattening means the bottom of each tile.  The
correction multiplies every score by a Gaussian centered on its tile, which
damps the edge-heavy bias before selection starts.
"""

from __future__ import annotations

import numpy as np

from .types import AUTO, TokenGrid


def auto_sigma(height: int, width: int) -> float:
    """Default Gaussian width for an H x W tile: max(H, W) / 3."""
    return max(height, width) / 3.0


def gaussian_correction(grid: TokenGrid, sigma: float | str = AUTO) -> np.ndarray:
    """Multiply each token's score by a Gaussian of its distance to the
    tile center.

    Each sub-image uses its own center ((H-1)/2, (W-1)/2).  With
    ``sigma="auto"`` each sub-image also gets its own width, max(H, W) / 3;
    a numeric ``sigma`` applies to all sub-images.  Returns float64 scores;
    the input grid is untouched.
    """
    out = grid.scores.astype(np.float64)
    rows = grid.positions[:, 0].astype(np.float64)
    cols = grid.positions[:, 1].astype(np.float64)
    for s, (h, w) in enumerate(grid.grid_dims):
        members = grid.subimage_ids == s
        if not np.any(members):
            continue
        sig = auto_sigma(h, w) if sigma == AUTO else float(sigma)
        cr = (h - 1) / 2.0
        cc = (w - 1) / 2.0
        sq = (rows[members] - cr) ** 2 + (cols[members] - cc) ** 2
        out[members] *= np.exp(-sq / (2.0 * sig * sig))
    return out
