#!/usr/bin/env python3
"""End to end: synthesize an episode, write it to disk, replay it through the
selector, and inspect the overlap diagnostics.

The same flow is available from the command line:

    vtprune gen --seed 21 --frames 60 --m 64 --n 16 --shift-every 20 --out ep.vlat
    vtprune prune --trace ep.vlat --ratio 0.25 --out manifest.json
    vtprune analyze --trace ep.vlat --k 8
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from vtprune import (
    EstimatorConfig,
    PruneConfig,
    SynthConfig,
    TraceHeader,
    episode_overlap_report,
    read_trace,
    run_prune,
    synthesize_trace,
    write_trace,
)

workdir = Path(tempfile.mkdtemp(prefix="vtprune-demo-"))
trace_path = workdir / "episode.vlat"

header = TraceHeader(m_visual=64, n_text=16, layers=4, embed_dim=32, episode_id="demo-21")
synth = SynthConfig(seed=21, frames=60, drift_sigma=0.1, noise_sigma=0.3, shift_every=20)
frames = synthesize_trace(synth, header)
write_trace(trace_path, header, frames)
print(f"wrote {trace_path} ({trace_path.stat().st_size / 1024:.0f} KiB, 60 frames)")

manifest = run_prune(trace_path, PruneConfig.from_ratio(0.25, 64), EstimatorConfig())
agg = manifest["aggregates"]
print("\nreplay manifest aggregates:")
print(f"  warm-up frames (kept everything): {agg['warmup_frames']}")
print(f"  mean candidate-pool size        : {agg['mean_pool_size']:.1f} (budget 16)")
print(f"  mean retained min distance      : {agg['mean_min_pairwise_distance']:.3f}")
print(f"  trace sha256                    : {manifest['trace']['sha256'][:16]}...")

sizes = [len(row["retained"]) for row in manifest["frames"]]
print(f"  retained per frame: {sizes[0]} (warm-up) -> {sizes[-1]} (steady state)")

# the manifest is plain JSON: rerun with the same trace and flags and you
# get byte-identical selections
print("\nfirst post-warm-up frame retains:", manifest["frames"][3]["retained"])

hdr, stream = read_trace(trace_path)
report = episode_overlap_report(hdr, list(stream), k=8)
consec = np.asarray(report.decode_t_vs_tminus1)
print("\ntop-8 overlap between consecutive decode frames (mean %.3f):" % consec.mean())
for t0 in range(0, 55, 11):
    row = " ".join(f"{v:.2f}" for v in consec[t0 : t0 + 11])
    print("  " + row)
print("dips near frames 20 and 40 are the synthetic target switches;")
print("the stage-vs-stage overlap stays low throughout (mean %.3f)." %
      np.mean(report.prefill_vs_decode))

print(json.dumps({"pool_trend_first_10": [r["pool_size"] for r in manifest["frames"][:10]]}))
