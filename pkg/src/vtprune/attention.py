"""Aggregate recorded attention matrices into per-patch importance scores.

Two stages produce scores over the M visual patches:

* prefill: the full vision-language pass, queries = all N+M context tokens.
  A patch's semantic relevance is the mean attention it receives over every
  query row.
* action decode: queries are action tokens (one row per autoregressive step,
  per chunk position, or a single pre-averaged row for flow heads).  A patch's
  action importance is the mean attention over those rows.

All scoring here is a column mean restricted to the visual key columns; the
operations are linear in the input matrix and invariant to query-row order.
Traces carry post-softmax matrices, so nothing here touches Q/K projections.
Scores are computed and returned in float64 regardless of input dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidValueError, ShapeMismatchError

ROW_SUM_TOL = 1e-5  # row-stochastic tolerance, absolute


@dataclass(frozen=True)
class TokenLayout:
    """Where the visual tokens sit in the key axis of a recorded matrix.

    The proprioceptive token, when present, is counted inside ``n_text``:
    it is vision-language context, never a pruning candidate.
    """

    n_text: int
    m_visual: int
    visual_offset: int | None = None  # defaults to n_text (text block first)

    def __post_init__(self):
        if self.n_text < 0:
            raise ShapeMismatchError("n_text", ">= 0", self.n_text)
        if self.m_visual < 1:
            raise ShapeMismatchError("m_visual", ">= 1", self.m_visual)
        if self.visual_offset is None:
            object.__setattr__(self, "visual_offset", self.n_text)
        if self.visual_offset < 0:
            raise ShapeMismatchError("visual_offset", ">= 0", self.visual_offset)

    @property
    def context_len(self) -> int:
        return self.n_text + self.m_visual

    def check_key_axis(self, cols: int):
        if self.visual_offset + self.m_visual > cols:
            raise ShapeMismatchError(
                "key axis", f">= {self.visual_offset + self.m_visual} columns", cols
            )


def check_attention_matrix(a: np.ndarray, row_stochastic: bool = False) -> np.ndarray:
    """Validate an attention matrix: 2-D, finite, nonnegative.

    When ``row_stochastic`` is set, additionally require each row to sum to 1
    within ``ROW_SUM_TOL`` absolute.  Returns the matrix as float64.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeMismatchError("attention matrix", "2-D", a.shape)
    if not np.isfinite(a).all():
        raise InvalidValueError("attention matrix contains non-finite entries")
    if (a < 0).any():
        raise InvalidValueError("attention matrix contains negative entries")
    if row_stochastic:
        sums = a.sum(axis=1)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            i = int(np.argmax(bad))
            raise InvalidValueError(
                f"row {i} sums to {sums[i]:.8f}, not 1 within {ROW_SUM_TOL}"
            )
    return a


def _visual_column_means(a: np.ndarray, layout: TokenLayout) -> np.ndarray:
    lo = layout.visual_offset
    return a[:, lo : lo + layout.m_visual].mean(axis=0)


def prefill_scores(a: np.ndarray, layout: TokenLayout) -> np.ndarray:
    """Semantic relevance per visual patch from a full prefill attention matrix.

    ``a`` must be square with N+M rows and columns.  The score of patch m is
    the mean of column ``visual_offset + m`` over all N+M query rows.  Causal
    prefill matrices are averaged literally, with no mask renormalization.
    """
    a = check_attention_matrix(a)
    n = layout.context_len
    if a.shape != (n, n):
        raise ShapeMismatchError("prefill attention", (n, n), a.shape)
    layout.check_key_axis(a.shape[1])
    return _visual_column_means(a, layout)


def decode_scores(a: np.ndarray, layout: TokenLayout) -> np.ndarray:
    """Action importance per visual patch from stacked decode attention rows.

    ``a`` has one row per action query (autoregressive steps already
    concatenated, chunk positions, or a single flow-averaged row) and N+M
    columns.  The score of patch m is the mean of its column over all rows.
    """
    a = check_attention_matrix(a)
    if a.shape[0] < 1:
        raise ShapeMismatchError("decode attention rows", ">= 1", a.shape[0])
    if a.shape[1] != layout.context_len:
        raise ShapeMismatchError(
            "decode attention columns", layout.context_len, a.shape[1]
        )
    layout.check_key_axis(a.shape[1])
    return _visual_column_means(a, layout)


def average_layer_scores(
    per_layer: list[np.ndarray] | np.ndarray, layer_range: tuple[int, int]
) -> np.ndarray:
    """Elementwise mean of score vectors over a half-open layer interval."""
    if len(per_layer) == 0:
        raise ShapeMismatchError("per-layer scores", ">= 1 layer", 0)
    stack = np.asarray(per_layer, dtype=np.float64)
    if stack.ndim != 2:
        raise ShapeMismatchError("per-layer scores", "list of equal-length vectors", stack.shape)
    start, stop = layer_range
    if not (0 <= start < stop <= stack.shape[0]):
        raise ShapeMismatchError(
            "layer range", f"non-empty subinterval of [0, {stack.shape[0]})", layer_range
        )
    return stack[start:stop].mean(axis=0)


def latter_half_range(n_layers: int) -> tuple[int, int]:
    """Layer interval covering the latter half of ``n_layers`` recorded layers."""
    if n_layers < 1:
        raise ShapeMismatchError("n_layers", ">= 1", n_layers)
    return (n_layers // 2, n_layers)
