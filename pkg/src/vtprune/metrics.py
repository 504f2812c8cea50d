"""Overlap diagnostics between attention stages and across timesteps.

Two ratios characterize an episode: how much the semantically top-attended
patches agree with the action-level top-attended ones (stage divergence),
and how much consecutive frames' action top-k sets agree (temporal
continuity).  Pure functions; episodes can be analyzed in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConfigError, ShapeMismatchError
from .selection import top_k_indices
from .trace import Frame, TraceHeader, frame_score_vectors


def overlap_ratio(a, b) -> float:
    """|a ∩ b| / k for two equal-size index sets."""
    sa, sb = set(int(i) for i in a), set(int(i) for i in b)
    if len(sa) != len(sb):
        raise ShapeMismatchError("overlap operands", len(sa), len(sb))
    if len(sa) < 1:
        raise ConfigError("overlap needs k >= 1")
    return len(sa & sb) / len(sa)


@dataclass(frozen=True)
class OverlapReport:
    k: int
    prefill_vs_decode: tuple[float, ...]  # one per frame
    decode_t_vs_tminus1: tuple[float, ...]  # one per consecutive pair

    @property
    def mean_prefill_vs_decode(self) -> float:
        return float(np.mean(self.prefill_vs_decode))

    @property
    def mean_decode_consecutive(self) -> float:
        return float(np.mean(self.decode_t_vs_tminus1))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "prefill_vs_decode": list(self.prefill_vs_decode),
            "decode_t_vs_tminus1": list(self.decode_t_vs_tminus1),
            "means": {
                "prefill_vs_decode": self.mean_prefill_vs_decode,
                "decode_t_vs_tminus1": self.mean_decode_consecutive,
            },
        }


def episode_overlap_report(
    header: TraceHeader, frames: Iterable[Frame], k: int
) -> OverlapReport:
    """Top-k overlaps per frame (stage vs. stage) and per consecutive pair.

    Decode scores are averaged across all recorded layers here (the
    diagnostic convention), unlike the selection pipeline's latter-half
    averaging.  Needs at least two frames.
    """
    pre_vs_dec: list[float] = []
    consec: list[float] = []
    prev_topk = None
    n_frames = 0
    for frame in frames:
        semantic, action = frame_score_vectors(header, frame, layer_treatment="all")
        top_sem = top_k_indices(semantic, k)
        top_act = top_k_indices(action, k)
        pre_vs_dec.append(overlap_ratio(top_sem, top_act))
        if prev_topk is not None:
            consec.append(overlap_ratio(top_act, prev_topk))
        prev_topk = top_act
        n_frames += 1
    if n_frames < 2:
        raise ConfigError(f"overlap report needs >= 2 frames, got {n_frames}")
    return OverlapReport(
        k=k,
        prefill_vs_decode=tuple(pre_vs_dec),
        decode_t_vs_tminus1=tuple(consec),
    )


# Fig-2-style default fractions of M for the analysis subcommand.
DEFAULT_K_FRACTIONS = (0.125, 0.25, 0.5)


def default_k_values(m_visual: int) -> list[int]:
    return sorted({max(1, int(f * m_visual + 1e-9)) for f in DEFAULT_K_FRACTIONS})
