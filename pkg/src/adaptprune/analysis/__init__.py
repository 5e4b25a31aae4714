"""Retained-set metrics, cross-dump attention aggregation, and heatmap
emitters (deterministic PPM/SVG plus matplotlib report figures)."""

from .aggregate import AttentionAggregate, aggregate_attention
from .figures import save_field_figure, save_metrics_figure
from .heatmap import PALETTES, palette_color, render_heatmap
from .metrics import RetainedSetMetrics, compute_metrics

__all__ = [
    "AttentionAggregate",
    "PALETTES",
    "RetainedSetMetrics",
    "aggregate_attention",
    "compute_metrics",
    "palette_color",
    "render_heatmap",
    "save_field_figure",
    "save_metrics_figure",
]
