"""Per-episode selection sessions over flat numeric buffers.

Inference pipelines that cannot afford file I/O call the pruning engine
in-process, one frame at a time: create a session per episode, then per
frame call ``session_select`` with the current prefill scores and patch
embeddings (flat buffers) and afterwards ``session_observe`` with the
decode scores the frame actually produced.  Selection for a frame never
sees that frame's decode attention, exactly like the trace-replay path,
and the returned index stream is identical to it given identical inputs.

Only flat contiguous numeric buffers and scalars cross this boundary; no
structured objects.  A session is single-threaded by contract; distinct
sessions are independent and may run concurrently.
"""

from __future__ import annotations

import threading

import numpy as np

import vtprune

__version__ = "0.1.0"

__all__ = [
    "SessionError",
    "session_create",
    "session_observe",
    "session_select",
    "session_close",
    "version",
]


class SessionError(Exception):
    """Binding-level failure; ``code`` is a stable machine-readable tag."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class _Session:
    __slots__ = ("m_visual", "embed_dim", "prune_cfg", "estimator")

    def __init__(self, m_visual, embed_dim, prune_cfg, est_cfg):
        self.m_visual = m_visual
        self.embed_dim = embed_dim
        self.prune_cfg = prune_cfg
        self.estimator = vtprune.EstimatorState(est_cfg)


_registry: dict[int, _Session] = {}
_registry_lock = threading.Lock()
_next_handle = 1


def _get(handle: int) -> _Session:
    with _registry_lock:
        session = _registry.get(handle)
    if session is None:
        raise SessionError("closed-handle", f"no open session with handle {handle}")
    return session


def _as_flat(buf, length: int, what: str) -> np.ndarray:
    try:
        arr = np.asarray(buf, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SessionError("bad-buffer", f"{what}: not a numeric buffer ({exc})") from exc
    arr = arr.reshape(-1)
    if arr.shape[0] != length:
        raise SessionError(
            "shape-mismatch", f"{what}: expected {length} values, got {arr.shape[0]}"
        )
    return arr


def session_create(
    m_visual: int,
    embed_dim: int,
    *,
    budget: int | None = None,
    ratio: float | None = None,
    variant: str = "dual",
    fusion_weight: float = 0.5,
    warmup: str = "retain-all",
    prune_layer: int = 3,
    mode: str = "window",
    alpha: float = 0.5,
    window: int = 3,
    gamma: float = 0.8,
) -> int:
    """Open a per-episode session; returns an opaque integer handle.

    Exactly one of ``budget`` (token count) or ``ratio`` (kept fraction)
    must be given.  The remaining keywords mirror the engine's pruning and
    smoothing configuration.
    """
    global _next_handle
    if m_visual < 1 or embed_dim < 1:
        raise SessionError("invalid-config", "m_visual and embed_dim must be >= 1")
    if (budget is None) == (ratio is None):
        raise SessionError("invalid-config", "give exactly one of budget or ratio")
    try:
        common = dict(
            prune_layer=prune_layer,
            variant=variant,
            fusion_weight=fusion_weight,
            warmup=warmup,
        )
        if budget is not None:
            prune_cfg = vtprune.PruneConfig(budget=budget, **common)
        else:
            prune_cfg = vtprune.PruneConfig.from_ratio(ratio, m_visual, **common)
        est_cfg = vtprune.EstimatorConfig(mode=mode, alpha=alpha, window=window, gamma=gamma)
    except (vtprune.ConfigError, ValueError) as exc:
        raise SessionError("invalid-config", str(exc)) from exc
    session = _Session(m_visual, embed_dim, prune_cfg, est_cfg)
    with _registry_lock:
        handle = _next_handle
        _next_handle += 1
        _registry[handle] = session
    return handle


def session_observe(handle: int, decode_scores) -> None:
    """Record one frame's observed action scores (flat buffer of length M)."""
    session = _get(handle)
    scores = _as_flat(decode_scores, session.m_visual, "decode scores")
    session.estimator.observe(scores)


def session_select(handle: int, prefill_scores, embeddings) -> np.ndarray:
    """Retained patch indices for the current frame.

    ``prefill_scores`` is a flat buffer of length M; ``embeddings`` a flat
    row-major buffer of length M * embed_dim.  Returns a flat int32 array of
    sorted indices, matching the trace-replay path frame for frame.
    """
    session = _get(handle)
    scores = _as_flat(prefill_scores, session.m_visual, "prefill scores")
    emb = _as_flat(
        embeddings, session.m_visual * session.embed_dim, "embeddings"
    ).reshape(session.m_visual, session.embed_dim)
    result = vtprune.select_frame(scores, emb, session.estimator, session.prune_cfg)
    return np.asarray(result.retained, dtype=np.int32)


def session_close(handle: int) -> None:
    """Release a session; later calls on the handle fail cleanly."""
    with _registry_lock:
        if _registry.pop(handle, None) is None:
            raise SessionError("closed-handle", f"no open session with handle {handle}")


def version() -> dict:
    """Versions of this binding layer and the engine underneath."""
    return {"bindings": __version__, "engine": vtprune.__version__}
