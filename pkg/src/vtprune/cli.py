"""Command-line front end: gen, prune, analyze, flops, oracle, bench.

Thin argument parsing over the library; every output is machine-readable
JSON on stdout.  Exit codes: 0 success, 1 usage error, 2 data error.
No network access, ever.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .errors import VtpruneError
from .estimator import EstimatorConfig, EstimatorState, SmoothingMode
from .flops import ModelDims, PRESETS, flops_full, flops_pruned, flops_ratio, selection_overhead_flops
from .metrics import default_k_values, episode_overlap_report
from .oracle import solve_exact
from .replay import manifest_json, run_prune
from .selection import PruneConfig, Variant, WarmupPolicy, select_frame
from .trace import (
    DecodeMode,
    PayloadKind,
    SynthConfig,
    TraceHeader,
    frame_score_vectors,
    read_header,
    read_trace,
    synthesize_trace,
    write_trace,
)

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_estimator_flags(p: argparse.ArgumentParser):
    p.add_argument("--mode", choices=[m.value for m in SmoothingMode], default="window")
    p.add_argument("--alpha", type=float, default=0.5, help="EMA smoothing factor")
    p.add_argument("--window", type=int, default=3, help="decay window size")
    p.add_argument("--gamma", type=float, default=0.8, help="decay rate")


def _add_budget_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--ratio", type=float, default=0.5, help="retained fraction of visual tokens")
    g.add_argument("--budget", type=int, help="retained token count (overrides --ratio)")
    p.add_argument("--variant", choices=[v.value for v in Variant], default="dual")
    p.add_argument("--fusion-weight", type=float, default=0.5)
    p.add_argument(
        "--warmup", choices=[w.value for w in WarmupPolicy], default="retain-all"
    )
    p.add_argument("--k", dest="prune_layer", type=int, default=3, help="prune layer index")


def _prune_config(args, m_visual: int) -> PruneConfig:
    common = dict(
        prune_layer=args.prune_layer,
        variant=Variant(args.variant),
        fusion_weight=args.fusion_weight,
        warmup=WarmupPolicy(args.warmup),
    )
    if args.budget is not None:
        return PruneConfig(budget=args.budget, **common)
    return PruneConfig.from_ratio(args.ratio, m_visual, **common)


def _estimator_config(args) -> EstimatorConfig:
    return EstimatorConfig(
        mode=SmoothingMode(args.mode),
        alpha=args.alpha,
        window=args.window,
        gamma=args.gamma,
    )


def cmd_gen(args) -> int:
    header = TraceHeader(
        m_visual=args.m,
        n_text=args.n,
        layers=args.layers,
        embed_dim=args.embed_dim,
        payload=PayloadKind(args.payload),
        decode_mode=DecodeMode(args.decode_mode),
        episode_id=args.episode_id or f"synth-{args.seed}",
    )
    cfg = SynthConfig(
        seed=args.seed,
        frames=args.frames,
        drift_sigma=args.drift_sigma,
        noise_sigma=args.noise_sigma,
        shift_every=args.shift_every,
    )
    write_trace(args.out, header, synthesize_trace(cfg, header))
    print(json.dumps({"out": args.out, "frames": args.frames, **header.to_dict()}, sort_keys=True))
    return 0


def cmd_prune(args) -> int:
    header = read_header(args.trace)
    manifest = run_prune(
        args.trace, _prune_config(args, header.m_visual), _estimator_config(args)
    )
    text = manifest_json(manifest)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    summary = {k: manifest[k] for k in ("engine", "config", "trace", "aggregates")}
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def cmd_analyze(args) -> int:
    header, frames = read_trace(args.trace)
    ks = [args.k] if args.k else default_k_values(header.m_visual)
    frames = list(frames)
    reports = [episode_overlap_report(header, frames, k).to_dict() for k in ks]
    out = {"trace": str(args.trace), "episode_id": header.episode_id, "reports": reports}
    text = json.dumps(out, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_flops(args) -> int:
    dims = ModelDims.from_preset(
        args.preset, n_text=args.n_text, retain_ratio=args.ratio, prune_layer=args.prune_layer
    )
    out = {
        "dims": {
            "layers": dims.layers,
            "prune_layer": dims.prune_layer,
            "hidden": dims.hidden,
            "ffn": dims.ffn,
            "n_text": dims.n_text,
            "m_visual": dims.m_visual,
            "retain_ratio": dims.retain_ratio,
        },
        "full": flops_full(dims),
        "pruned": flops_pruned(dims),
        "ratio": flops_ratio(dims),
    }
    if args.overhead:
        out["selection_overhead"] = selection_overhead_flops(dims)
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def cmd_oracle(args) -> int:
    if args.embeddings.endswith(".npy"):
        emb = np.load(args.embeddings)
    else:
        with open(args.embeddings, "r", encoding="utf-8") as fh:
            emb = np.asarray(json.load(fh), dtype=np.float64)
    pool = args.pool if args.pool else list(range(emb.shape[0]))
    sol = solve_exact(emb, pool, args.target)
    print(json.dumps(sol.to_dict(), sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    sizes = [args.m] if args.m else [256, 512]
    results = {}
    for m in sizes:
        header = TraceHeader(m_visual=m, n_text=45, layers=4, embed_dim=args.embed_dim)
        synth = SynthConfig(seed=args.seed, frames=args.frames)
        frames = synthesize_trace(synth, header)
        cfg = PruneConfig.from_ratio(args.ratio, m)
        est = EstimatorState(EstimatorConfig())
        scored = [frame_score_vectors(header, f, "latter-half") for f in frames]
        times = []
        for frame, (semantic, observed) in zip(frames, scored):
            t0 = time.perf_counter()
            select_frame(semantic, frame.embeddings, est, cfg)
            est.observe(observed)
            times.append(time.perf_counter() - t0)
        arr = 1000.0 * np.asarray(times)
        results[str(m)] = {
            "frames": len(frames),
            "ratio": args.ratio,
            "mean_ms": float(arr.mean()),
            "median_ms": float(np.median(arr)),
            "p95_ms": float(np.percentile(arr, 95)),
            "max_ms": float(arr.max()),
        }
    print(json.dumps({"per_frame_selection": results}, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vtprune", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vtprune {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize an episode trace", parents=[])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--m", type=int, default=256, help="visual token count")
    p.add_argument("--n", type=int, default=45, help="text/context token count")
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--payload", choices=[k.value for k in PayloadKind], default="scored")
    p.add_argument(
        "--decode-mode", choices=[m.value for m in DecodeMode], default="autoregressive"
    )
    p.add_argument("--drift-sigma", type=float, default=0.1)
    p.add_argument("--noise-sigma", type=float, default=0.3)
    p.add_argument("--shift-every", type=int, default=None)
    p.add_argument("--episode-id", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prune", help="replay a trace through the selector")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", help="write the full manifest JSON here")
    _add_budget_flags(p)
    _add_estimator_flags(p)
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("analyze", help="top-k overlap diagnostics for a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("flops", help="full vs pruned FLOPs and their ratio")
    p.add_argument("--preset", choices=sorted(PRESETS), default="openvla-7b")
    p.add_argument("--n-text", type=int, default=45)
    p.add_argument("--ratio", type=float, default=0.5)
    p.add_argument("--k", dest="prune_layer", type=int, default=3)
    p.add_argument("--overhead", action="store_true", help="report selection-overhead estimate")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("oracle", help="exact max-min diversity on a small pool")
    p.add_argument("--embeddings", required=True, help=".npy or JSON 2-D array")
    p.add_argument("--pool", type=int, nargs="*", default=None)
    p.add_argument("--target", type=int, required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="per-frame selection latency statistics")
    p.add_argument("--m", type=int, default=None, help="visual tokens (default: 256 and 512)")
    p.add_argument("--frames", type=int, default=300)
    p.add_argument("--ratio", type=float, default=0.25)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VtpruneError as exc:
        print(f"vtprune: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"vtprune: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
