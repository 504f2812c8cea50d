#!/usr/bin/env python3
"""Walk through per-patch importance scoring on toy attention matrices.

A recorded attention matrix has one row per query token and one column per
key token; the first N columns are text context, the last M are visual
patches.  A patch's score is simply the mean attention its column receives.
"""

import numpy as np

from vtprune import TokenLayout, average_layer_scores, decode_scores, latter_half_range, prefill_scores

np.set_printoptions(precision=4, suppress=True)

N, M = 2, 4
layout = TokenLayout(n_text=N, m_visual=M)
print(f"Context: {N} text tokens + {M} visual patches\n")

# --- prefill: queries are ALL context tokens -------------------------------
print("1) A uniform prefill matrix spreads attention evenly,")
print("   so every patch scores the same:")
uniform = np.full((N + M, N + M), 1 / (N + M))
print("   scores =", prefill_scores(uniform, layout))

print("\n2) If every query row attends only to patch 0, that patch")
print("   absorbs all the visual mass:")
onehot = np.zeros((N + M, N + M))
onehot[:, N] = 1.0
print("   scores =", prefill_scores(onehot, layout))

print("\n3) For a row-stochastic matrix the text-column and visual-column")
print("   scores split the total mass of 1:")
rng = np.random.default_rng(0)
a = rng.uniform(size=(N + M, N + M))
a /= a.sum(axis=1, keepdims=True)
vis = prefill_scores(a, layout)
txt = a[:, :N].mean(axis=0)
print(f"   visual sum {vis.sum():.6f} + text sum {txt.sum():.6f} = {vis.sum() + txt.sum():.6f}")

# --- decode: queries are action tokens -------------------------------------
print("\n4) Decode attention has one row per action token.  Two rows that")
print("   each commit to a different patch average to a 50/50 split:")
dec = np.zeros((2, N + M))
dec[0, N] = 1.0
dec[1, N + 1] = 1.0
print("   scores =", decode_scores(dec, layout))

# --- layer averaging --------------------------------------------------------
print("\n5) Scores from several recorded layers are averaged; the selection")
print("   pipeline uses the latter half, where action signal concentrates:")
per_layer = [np.full(M, float(layer)) for layer in range(8)]
print("   all layers   :", average_layer_scores(per_layer, (0, 8)))
print("   latter half  :", average_layer_scores(per_layer, latter_half_range(8)))
