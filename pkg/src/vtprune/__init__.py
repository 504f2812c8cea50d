"""Trace-driven dual-level visual-token pruning engine.

Consumes per-timestep attention records and patch embeddings, estimates
action-level token importance by temporal smoothing, selects a compact token
subset by combine-then-filter (relevance union + greedy max-min redundancy
filtering), and reports FLOPs savings and attention-overlap diagnostics.
"""

__version__ = "0.1.0"

from .attention import (
    TokenLayout,
    average_layer_scores,
    check_attention_matrix,
    decode_scores,
    latter_half_range,
    prefill_scores,
)
from .errors import (
    ConfigError,
    InvalidValueError,
    ShapeMismatchError,
    TraceFormatError,
    VtpruneError,
)
from .estimator import EstimatorConfig, EstimatorState, SmoothingMode
from .flops import (
    ModelDims,
    PRESETS,
    c_layer,
    flops_full,
    flops_pruned,
    flops_ratio,
    selection_overhead_flops,
)
from .metrics import OverlapReport, episode_overlap_report, overlap_ratio
from .oracle import OracleSolution, solve_exact
from .replay import replay_frames, run_prune
from .selection import (
    PruneConfig,
    SelectionResult,
    Variant,
    WarmupPolicy,
    cosine_distance,
    min_pairwise_distance,
    min_redundancy_filter,
    pairwise_cosine_distances,
    select_dual,
    select_frame,
    select_variant,
    top_k_indices,
)
from .trace import (
    DecodeMode,
    Frame,
    PayloadKind,
    SynthConfig,
    TraceHeader,
    frame_score_vectors,
    read_header,
    read_trace,
    synthesize_trace,
    write_trace,
)

__all__ = [
    "ConfigError",
    "DecodeMode",
    "EstimatorConfig",
    "EstimatorState",
    "Frame",
    "InvalidValueError",
    "ModelDims",
    "OracleSolution",
    "OverlapReport",
    "PRESETS",
    "PayloadKind",
    "PruneConfig",
    "SelectionResult",
    "ShapeMismatchError",
    "SmoothingMode",
    "SynthConfig",
    "TokenLayout",
    "TraceFormatError",
    "TraceHeader",
    "Variant",
    "VtpruneError",
    "WarmupPolicy",
    "average_layer_scores",
    "c_layer",
    "check_attention_matrix",
    "cosine_distance",
    "decode_scores",
    "episode_overlap_report",
    "flops_full",
    "flops_pruned",
    "flops_ratio",
    "frame_score_vectors",
    "latter_half_range",
    "min_pairwise_distance",
    "min_redundancy_filter",
    "overlap_ratio",
    "pairwise_cosine_distances",
    "prefill_scores",
    "read_header",
    "read_trace",
    "replay_frames",
    "run_prune",
    "select_dual",
    "select_frame",
    "select_variant",
    "selection_overhead_flops",
    "solve_exact",
    "synthesize_trace",
    "top_k_indices",
    "write_trace",
]
