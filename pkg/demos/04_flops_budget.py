#!/usr/bin/env python3
"""Theoretical compute savings from visual-token pruning.

Per-layer cost is C(n) = 4nd^2 + 2n^2d + 2ndm.  Everything before the prune
layer pays full price; everything after sees the shortened sequence.  The
quadratic attention term means savings grow roughly with the square of the
pruned fraction in the later layers.
"""

from vtprune import ModelDims, c_layer, flops_full, flops_pruned, flops_ratio, selection_overhead_flops

N_TEXT = 45  # instruction + proprioceptive context for a 256-patch backbone

print("7B-class backbone preset: 32 layers, hidden 4096, FFN 11008, 256 patches")
print(f"non-visual context: {N_TEXT} tokens\n")

full = ModelDims.from_preset("openvla-7b", n_text=N_TEXT, retain_ratio=1.0)
print(f"one full layer C({full.full_seq}) = {c_layer(full.full_seq, 4096, 11008):,} FLOPs")
print(f"full forward pass        = {flops_full(full) / 1e12:.3f} TFLOPs\n")

print(f"{'keep':>6} {'kept tokens':>12} {'pruned TFLOPs':>14} {'ratio':>8}")
for rho in (1.0, 0.75, 0.5, 0.25, 0.125):
    dims = ModelDims.from_preset("openvla-7b", n_text=N_TEXT, retain_ratio=rho)
    print(
        f"{rho:>6.3f} {dims.pruned_seq - N_TEXT:>12} "
        f"{flops_pruned(dims) / 1e12:>14.3f} {flops_ratio(dims):>8.4f}"
    )

print("\nMoving the prune layer later keeps more full-price layers:")
for k in (1, 3, 8, 16, 32):
    dims = ModelDims.from_preset("openvla-7b", n_text=N_TEXT, retain_ratio=0.25, prune_layer=k)
    print(f"  prune at layer {k:>2}: ratio {flops_ratio(dims):.4f}")

dims = ModelDims.from_preset("openvla-7b", n_text=N_TEXT, retain_ratio=0.25)
over = selection_overhead_flops(dims)
print(
    f"\nSelector overhead estimate at keep=0.25: {over['total']:,} FLOPs "
    f"({over['fraction_of_full']:.2e} of a full pass) - negligible."
)
