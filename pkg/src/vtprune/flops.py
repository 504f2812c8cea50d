"""Closed-form transformer FLOPs accounting for full vs. pruned inference.

Per-layer attention + FFN cost for sequence length n, hidden size d and FFN
intermediate size m:

    C(n) = 4*n*d^2 + 2*n^2*d + 2*n*d*m

A full forward pass costs T*C(N+M).  When the visual block is cut to a
fraction rho at layer K, the first K-1 layers still see the full sequence and
the remaining T-K+1 layers see N + floor(rho*M) tokens.  The quadratic
attention term makes the saving scale roughly with rho^2 past layer K.

All counts are exact Python integers (they overflow int64 at 7B scale).
Token-selection overhead (smoothing, top-k union, greedy filtering) is
excluded from the totals; ``selection_overhead_flops`` reports a rough
estimate separately.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError

# Backbone shape presets; the non-visual token count stays a user input
# (prompt dependent, typically ~30-50 for manipulation instructions).
PRESETS = {
    "openvla-7b": {"layers": 32, "hidden": 4096, "ffn": 11008, "m_visual": 256},
}


@dataclass(frozen=True)
class ModelDims:
    layers: int  # T
    prune_layer: int  # K, tokens dropped before this layer
    hidden: int  # d
    ffn: int  # FFN intermediate size
    n_text: int  # non-visual context tokens (text + proprioceptive)
    m_visual: int  # visual tokens before pruning
    retain_ratio: float  # rho, fraction of visual tokens kept

    def __post_init__(self):
        if self.layers < 1 or not 1 <= self.prune_layer <= self.layers:
            raise ConfigError(
                f"need 1 <= prune_layer <= layers, got K={self.prune_layer}, T={self.layers}"
            )
        if self.hidden < 1 or self.ffn < 1 or self.m_visual < 1 or self.n_text < 0:
            raise ConfigError("hidden, ffn, m_visual must be >= 1 and n_text >= 0")
        if not 0.0 < self.retain_ratio <= 1.0:
            raise ConfigError(f"retain_ratio must be in (0, 1], got {self.retain_ratio}")

    @classmethod
    def from_preset(cls, name: str, n_text: int, retain_ratio: float, prune_layer: int = 3):
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        p = PRESETS[name]
        return cls(
            layers=p["layers"],
            prune_layer=prune_layer,
            hidden=p["hidden"],
            ffn=p["ffn"],
            n_text=n_text,
            m_visual=p["m_visual"],
            retain_ratio=retain_ratio,
        )

    @property
    def full_seq(self) -> int:
        return self.n_text + self.m_visual

    @property
    def pruned_seq(self) -> int:
        # floor with an epsilon guard against 0.29*100 == 28.999...996;
        # clamped to >= 1 kept token, matching the selection layer's budget
        return self.n_text + max(1, int(self.retain_ratio * self.m_visual + 1e-9))


def c_layer(n: int, d: int, m: int) -> int:
    """Per-layer FLOPs 4nd^2 + 2n^2d + 2ndm, exact."""
    if n < 0:
        raise ConfigError(f"sequence length must be >= 0, got {n}")
    n, d, m = int(n), int(d), int(m)
    return 4 * n * d * d + 2 * n * n * d + 2 * n * d * m


def flops_full(dims: ModelDims) -> int:
    return dims.layers * c_layer(dims.full_seq, dims.hidden, dims.ffn)


def flops_pruned(dims: ModelDims) -> int:
    before = (dims.prune_layer - 1) * c_layer(dims.full_seq, dims.hidden, dims.ffn)
    after = (dims.layers - dims.prune_layer + 1) * c_layer(
        dims.pruned_seq, dims.hidden, dims.ffn
    )
    return before + after


def flops_ratio(dims: ModelDims) -> float:
    return flops_pruned(dims) / flops_full(dims)


def selection_overhead_flops(dims: ModelDims, window: int = 3) -> dict:
    """Rough per-frame cost of the selector itself, for the overhead report.

    Smoothing is ~2 multiply-adds per patch per window slot; the dominant
    term is the candidate-pool distance matrix (pool is at most twice the
    budget) over hidden-width embeddings.
    """
    budget = int(dims.retain_ratio * dims.m_visual + 1e-9)
    pool = min(2 * budget, dims.m_visual)
    smoothing = 2 * window * dims.m_visual
    distances = 2 * pool * pool * dims.hidden
    greedy = pool * pool
    total = smoothing + distances + greedy
    return {
        "smoothing": smoothing,
        "distances": distances,
        "greedy": greedy,
        "total": total,
        "fraction_of_full": total / flops_full(dims),
    }


def ratio_at(dims: ModelDims, retain_ratio: float) -> float:
    """Convenience: the ratio with a different retention fraction."""
    return flops_ratio(replace(dims, retain_ratio=retain_ratio))
