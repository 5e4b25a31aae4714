"""Deterministic heatmap emitters: binary PPM (P6) and SVG 1.1.

Both formats are written by hand so identical inputs give identical bytes.
Values are min-max normalized per image; a constant field renders as the
palette midpoint.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

# linear-interpolation anchors, t in [0, 1]
PALETTES: dict[str, tuple[tuple[int, int, int], ...]] = {
    "viridis": ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)),
    "gray": ((0, 0, 0), (255, 255, 255)),
    "hot": ((0, 0, 0), (255, 0, 0), (255, 255, 0), (255, 255, 255)),
}


def palette_color(palette: str, t: float) -> tuple[int, int, int]:
    """Color at normalized position t, interpolated between anchor stops."""
    try:
        stops = PALETTES[palette]
    except KeyError:
        raise ValidationError(
            f"palette: unknown palette {palette!r}; valid: {', '.join(sorted(PALETTES))}"
        ) from None
    t = min(max(float(t), 0.0), 1.0)
    span = len(stops) - 1
    seg = min(int(t * span), span - 1)
    local = t * span - seg
    a, b = stops[seg], stops[seg + 1]
    return tuple(int(round(a[i] + (b[i] - a[i]) * local)) for i in range(3))


def _normalize(values: np.ndarray) -> np.ndarray:
    field = np.asarray(values, dtype=np.float64)
    if field.ndim != 2 or field.size == 0:
        raise ValidationError("values: expected a non-empty 2-D field")
    if not np.all(np.isfinite(field)):
        raise ValidationError("values: non-finite value")
    lo = float(field.min())
    hi = float(field.max())
    if hi == lo:
        return np.full(field.shape, 0.5)
    return (field - lo) / (hi - lo)


def render_heatmap(values: np.ndarray, palette: str = "viridis", fmt: str = "ppm") -> bytes:
    """Render an H x W field to image bytes.

    Parameters
    ----------
    values : array of shape (H, W)
        Finite field; normalized to [0, 1] by its own min and max.
    palette : str
        One of PALETTES.
    fmt : str
        "ppm" for binary P6 (payload exactly 3*H*W bytes after the header)
        or "svg" for one unit rect per cell, row-major, 6-digit hex fills.
    """
    t = _normalize(values)
    h, w = t.shape
    colors = [[palette_color(palette, t[r, c]) for c in range(w)] for r in range(h)]

    if fmt == "ppm":
        payload = bytearray()
        for row in colors:
            for rgb in row:
                payload.extend(rgb)
        return f"P6\n{w} {h}\n255\n".encode("ascii") + bytes(payload)

    if fmt == "svg":
        lines = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}" shape-rendering="crispEdges">',
        ]
        for r, row in enumerate(colors):
            for c, (red, green, blue) in enumerate(row):
                lines.append(
                    f'<rect x="{c}" y="{r}" width="1" height="1" fill="#{red:02x}{green:02x}{blue:02x}"/>'
                )
        lines.append("</svg>")
        return ("\n".join(lines) + "\n").encode("ascii")

    raise ValidationError(f"fmt: unknown format {fmt!r}; valid: ppm, svg")
