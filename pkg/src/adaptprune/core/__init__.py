"""Core pruning engine: domain types, decay kernels, score correction, the
adaptive NMS loop, and every baseline strategy."""

from .correction import auto_sigma, gaussian_correction
from .decay import cosine_similarity, similarity_decay, spatial_decay
from .select import adaptprune_select
from .strategies import baseline_select, select
from .types import (
    AUTO,
    RANDOMIZED_STRATEGIES,
    STRATEGIES,
    PruneConfig,
    PruneResult,
    TokenGrid,
    retained_count,
)

__all__ = [
    "AUTO",
    "RANDOMIZED_STRATEGIES",
    "STRATEGIES",
    "PruneConfig",
    "PruneResult",
    "TokenGrid",
    "adaptprune_select",
    "auto_sigma",
    "baseline_select",
    "cosine_similarity",
    "gaussian_correction",
    "retained_count",
    "select",
    "similarity_decay",
    "spatial_decay",
]
