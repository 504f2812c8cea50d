"""Exact brute-force solver for the Max-Min Diversity Problem on small pools.

Enumerates every subset of the requested size and keeps one maximizing the
minimum pairwise cosine distance.  Exists purely as ground truth for testing
the greedy filter; the enumeration guard keeps it honest about its scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError
from .selection import COSINE_DISTANCE_MAX, pairwise_cosine_distances

MAX_POOL = 20  # C(20, 10) ~ 184k subsets; beyond this use the greedy filter


@dataclass(frozen=True)
class OracleSolution:
    subset: tuple[int, ...]  # sorted ascending
    optimum: float  # maximized min pairwise cosine distance

    def to_dict(self) -> dict:
        return {"subset": list(self.subset), "optimum": self.optimum}


def solve_exact(emb: np.ndarray, pool, target: int) -> OracleSolution:
    """Enumerate all C(|pool|, target) subsets; ties go to the
    lexicographically smallest index tuple.

    The min over a singleton's (empty) pair set is defined as the cosine
    distance ceiling 2.0, so target=1 is well-posed and returns the lowest
    index.
    """
    pool = sorted(set(int(i) for i in pool))
    if len(pool) == 0:
        raise ConfigError("candidate pool is empty")
    if len(pool) > MAX_POOL:
        raise ConfigError(
            f"pool of {len(pool)} exceeds the enumeration guard ({MAX_POOL}); "
            "use the greedy min_redundancy_filter instead"
        )
    if not 1 <= target <= len(pool):
        raise ConfigError(f"target must be in [1, {len(pool)}], got {target}")

    emb = np.asarray(emb, dtype=np.float64)
    d = pairwise_cosine_distances(emb[np.asarray(pool)])

    best_subset: tuple[int, ...] | None = None
    best_value = -1.0
    for local in combinations(range(len(pool)), target):
        if target == 1:
            value = COSINE_DISTANCE_MAX
        else:
            value = min(d[i, j] for i, j in combinations(local, 2))
        # combinations() yields lexicographically, so strict improvement
        # keeps the lexicographically smallest subset on ties
        if value > best_value:
            best_value = value
            best_subset = local
    assert best_subset is not None
    return OracleSolution(
        subset=tuple(pool[i] for i in best_subset), optimum=float(best_value)
    )
