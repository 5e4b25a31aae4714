"""Matplotlib figure output for the report paths.

The hand-rolled PPM/SVG emitters stay the canonical deterministic formats;
these figures are the human-friendly companions written next to the JSON
reports.  matplotlib is imported lazily so the figure-free paths never pay
for it.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_metrics_figure(metrics_by_strategy: Mapping[str, Mapping[str, float]], path: str) -> None:
    """Grouped bar chart: one group per metric, one bar per strategy."""
    plt = _pyplot()
    strategies = list(metrics_by_strategy)
    metric_names = ["dispersion", "redundancy", "score_mass"]
    x = np.arange(len(metric_names), dtype=np.float64)
    width = 0.8 / max(len(strategies), 1)

    fig, ax = plt.subplots(figsize=(7, 4))
    for k, name in enumerate(strategies):
        vals = [float(metrics_by_strategy[name][m]) for m in metric_names]
        ax.bar(x + k * width, vals, width, label=name)
    ax.set_xticks(x + width * (len(strategies) - 1) / 2)
    ax.set_xticklabels(metric_names)
    ax.set_ylabel("value")
    ax.set_title("retained-set metrics by strategy")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def save_field_figure(field: np.ndarray, path: str, title: str = "mean attention") -> None:
    """Render a 2-D field as an image with a colorbar."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(np.asarray(field, dtype=np.float64), cmap="viridis", interpolation="nearest")
    ax.set_xlabel("patch col")
    ax.set_ylabel("patch row")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
