"""Replay a trace through the selector, producing per-frame results and a
reproducible run manifest.

Replay order per frame mirrors deployment: select with the estimator state
accumulated from *earlier* frames, then feed the frame's observed decode
scores into the estimator.  One trace file is one episode; the estimator
state never crosses files.
"""

from __future__ import annotations

import hashlib
import json
import time
from typing import Iterable

from . import __version__
from .errors import ConfigError
from .estimator import EstimatorConfig, EstimatorState
from .flops import ModelDims, PRESETS, flops_ratio
from .selection import PruneConfig, SelectionResult, select_frame
from .trace import Frame, TraceHeader, frame_score_vectors, read_trace


def replay_frames(
    header: TraceHeader,
    frames: Iterable[Frame],
    prune_cfg: PruneConfig,
    est_cfg: EstimatorConfig,
) -> list[SelectionResult]:
    """Run selection over an episode in timestep order."""
    estimator = EstimatorState(est_cfg)
    results: list[SelectionResult] = []
    for frame in frames:
        semantic, observed_action = frame_score_vectors(header, frame, "latter-half")
        results.append(select_frame(semantic, frame.embeddings, estimator, prune_cfg))
        estimator.observe(observed_action)
    return results


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_snapshot(prune_cfg: PruneConfig, est_cfg: EstimatorConfig, m_visual: int) -> dict:
    return {
        "budget": prune_cfg.budget,
        "ratio": prune_cfg.budget / m_visual,
        "prune_layer": prune_cfg.prune_layer,
        "variant": prune_cfg.variant.value,
        "fusion_weight": prune_cfg.fusion_weight,
        "warmup": prune_cfg.warmup.value,
        "estimator_mode": est_cfg.mode.value,
        "alpha": est_cfg.alpha,
        "window": est_cfg.window,
        "gamma": est_cfg.gamma,
    }


def run_prune(
    trace_path,
    prune_cfg: PruneConfig,
    est_cfg: EstimatorConfig,
    dims_preset: str = "openvla-7b",
) -> dict:
    """Replay a trace file and assemble the run manifest.

    The manifest plus the trace file fully determine the run: it snapshots
    every flag, the engine version, and the trace checksum.  Wall-clock
    numbers are isolated under "timings" so determinism checks can mask that
    one section.
    """
    if dims_preset not in PRESETS:
        raise ConfigError(f"unknown preset {dims_preset!r}; known: {sorted(PRESETS)}")
    started = time.perf_counter()
    header, frames = read_trace(trace_path)
    results = replay_frames(header, frames, prune_cfg, est_cfg)
    elapsed = time.perf_counter() - started

    frame_rows = []
    for t, res in enumerate(results):
        frame_rows.append(
            {
                "timestep": t,
                "retained": list(res.retained),
                "pool_size": res.pool_size,
                "min_pairwise_distance": res.min_pairwise_distance,
                "warmup_applied": res.warmup_applied,
            }
        )
    n = len(results)
    preset = PRESETS[dims_preset]
    ratio = None
    if preset["m_visual"] == header.m_visual and prune_cfg.budget <= header.m_visual:
        dims = ModelDims(
            layers=preset["layers"],
            prune_layer=prune_cfg.prune_layer,
            hidden=preset["hidden"],
            ffn=preset["ffn"],
            n_text=header.n_text,
            m_visual=header.m_visual,
            retain_ratio=prune_cfg.budget / header.m_visual,
        )
        ratio = flops_ratio(dims)

    manifest = {
        "engine": {"name": "vtprune", "version": __version__},
        "config": _config_snapshot(prune_cfg, est_cfg, header.m_visual),
        "trace": {
            "path": str(trace_path),
            "sha256": file_sha256(trace_path),
            "episode_id": header.episode_id,
            "frames": n,
            "m_visual": header.m_visual,
            "n_text": header.n_text,
            "payload": header.payload.value,
        },
        "frames": frame_rows,
        "aggregates": {
            "warmup_frames": sum(1 for r in results if r.warmup_applied),
            "mean_pool_size": sum(r.pool_size for r in results) / n if n else None,
            "mean_min_pairwise_distance": (
                sum(r.min_pairwise_distance for r in results) / n if n else None
            ),
            "flops_ratio": ratio,
            "flops_dims_preset": dims_preset,
        },
        "timings": {
            "wall_clock_s": elapsed,
            "per_frame_ms_mean": 1000.0 * elapsed / n if n else None,
        },
    }
    return manifest


def manifest_json(manifest: dict) -> str:
    return json.dumps(manifest, sort_keys=True, indent=2)
