"""adaptprune: attention-aware visual token pruning.

Greedy adaptive NMS over attention scores, spatial distance, and key
similarity, with a center-weighted score correction, ablation baselines, an
analytic FLOPs model, retained-set metrics, deterministic dump formats, and
a brute-force reference implementation for differential testing.
"""

from .analysis import (
    AttentionAggregate,
    RetainedSetMetrics,
    aggregate_attention,
    compute_metrics,
    render_heatmap,
)
from .core import (
    AUTO,
    STRATEGIES,
    PruneConfig,
    PruneResult,
    TokenGrid,
    adaptprune_select,
    baseline_select,
    cosine_similarity,
    gaussian_correction,
    retained_count,
    select,
    similarity_decay,
    spatial_decay,
)
from .errors import DumpFormatError, ValidationError
from .flops import FlopsSpec, layer_flops, reduction
from .io import DumpHeader, read_dump, write_dump
from .oracle import cutoff_discrepancy, reference_select

__version__ = "0.1.0"

__all__ = [
    "AUTO",
    "AttentionAggregate",
    "DumpFormatError",
    "DumpHeader",
    "FlopsSpec",
    "PruneConfig",
    "PruneResult",
    "RetainedSetMetrics",
    "STRATEGIES",
    "TokenGrid",
    "ValidationError",
    "adaptprune_select",
    "aggregate_attention",
    "baseline_select",
    "compute_metrics",
    "cosine_similarity",
    "cutoff_discrepancy",
    "gaussian_correction",
    "layer_flops",
    "read_dump",
    "reduction",
    "reference_select",
    "render_heatmap",
    "retained_count",
    "select",
    "similarity_decay",
    "spatial_decay",
    "write_dump",
    "__version__",
]
