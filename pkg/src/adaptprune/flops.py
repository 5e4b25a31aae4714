"""Analytic prefill FLOPs model for pruning at a fixed layer.

The per-layer cost 4*n*d^2 + 2*n^2*d + 2*n*d*m (attention projections,
attention matrix, FFN) is the standard decoder prefill model.  Pruning at
layer K leaves the first K layers at full token count and the remaining
L - K layers at the reduced count; the reduction is the relative savings
over the full L-layer run.  Exact integer arithmetic throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class FlopsSpec:
    """Model shape plus the pruning point.

    Parameters
    ----------
    hidden_dim : int
        Transformer width d.
    ffn_dim : int
        FFN inner width m.
    num_layers : int
        Decoder layer count L.
    visual_tokens : int
        Visual tokens entering layer 0.
    text_tokens : int
        Text tokens (never pruned).
    prune_layer : int
        Layer K at which pruning happens, 0 <= K <= L.
    keep_fraction : float
        Fraction of visual tokens kept from layer K on.
    """

    hidden_dim: int
    ffn_dim: int
    num_layers: int
    visual_tokens: int
    text_tokens: int
    prune_layer: int
    keep_fraction: float

    def __post_init__(self):
        for name in ("hidden_dim", "ffn_dim", "num_layers"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name}: must be >= 1")
        if self.visual_tokens < 0 or self.text_tokens < 0:
            raise ValidationError("visual_tokens/text_tokens: must be >= 0")
        if self.visual_tokens + self.text_tokens < 1:
            raise ValidationError("visual_tokens/text_tokens: at least one token required")
        if not (0 <= self.prune_layer <= self.num_layers):
            raise ValidationError("prune_layer: must lie in [0, num_layers]")
        if not (0 < self.keep_fraction <= 1):
            raise ValidationError("keep_fraction: must lie in (0, 1]")


def layer_flops(n_tokens: int, hidden_dim: int, ffn_dim: int) -> int:
    """FLOPs of one decoder layer over n tokens: 4nd^2 + 2n^2 d + 2ndm."""
    n, d, m = int(n_tokens), int(hidden_dim), int(ffn_dim)
    return 4 * n * d * d + 2 * n * n * d + 2 * n * d * m


def kept_visual_tokens(spec: FlopsSpec) -> int:
    """Visual tokens surviving the prune: keep_fraction * n_v, rounded half-up."""
    return int(math.floor(spec.keep_fraction * spec.visual_tokens + 0.5))


def baseline_flops(spec: FlopsSpec) -> int:
    return spec.num_layers * layer_flops(spec.visual_tokens + spec.text_tokens, spec.hidden_dim, spec.ffn_dim)


def pruned_flops(spec: FlopsSpec) -> int:
    full = layer_flops(spec.visual_tokens + spec.text_tokens, spec.hidden_dim, spec.ffn_dim)
    cut = layer_flops(kept_visual_tokens(spec) + spec.text_tokens, spec.hidden_dim, spec.ffn_dim)
    return spec.prune_layer * full + (spec.num_layers - spec.prune_layer) * cut


def reduction(spec: FlopsSpec) -> float:
    """Fractional FLOPs saved by pruning, in [0, 1)."""
    return 1.0 - pruned_flops(spec) / baseline_flops(spec)


# the published 7B configuration used for the headline reduction figure
LLAVA_15_7B = FlopsSpec(
    hidden_dim=4096,
    ffn_dim=11008,
    num_layers=32,
    visual_tokens=576,
    text_tokens=0,
    prune_layer=3,
    keep_fraction=0.10,
)
