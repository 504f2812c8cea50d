from itertools import combinations

import numpy as np
import pytest

from vtprune import ConfigError, cosine_distance, solve_exact

from .conftest import unit_circle


def min_pair_dist(emb, subset):
    return min(cosine_distance(emb[i], emb[j]) for i, j in combinations(subset, 2))


class TestSolveExact:
    def test_target_equals_pool_is_forced(self, rng):
        emb = rng.normal(size=(5, 3))
        sol = solve_exact(emb, [0, 2, 4], 3)
        assert sol.subset == (0, 2, 4)
        assert abs(sol.optimum - min_pair_dist(emb, sol.subset)) < 1e-12

    def test_singleton_uses_distance_ceiling(self, rng):
        emb = rng.normal(size=(4, 3))
        sol = solve_exact(emb, [2, 1, 3], 1)
        assert sol.subset == (1,)  # lexicographically smallest
        assert sol.optimum == 2.0

    def test_four_angle_instance(self):
        emb = unit_circle([0, 10, 90, 180])
        sol = solve_exact(emb, [0, 1, 2, 3], 2)
        assert sol.subset == (0, 3)
        assert abs(sol.optimum - 2.0) < 1e-12
        # exhaustive check over all 6 pairs
        best = max(min_pair_dist(emb, pair) for pair in combinations(range(4), 2))
        assert abs(sol.optimum - best) < 1e-12

    def test_enumeration_guard(self, rng):
        emb = rng.normal(size=(25, 2))
        with pytest.raises(ConfigError, match="greedy"):
            solve_exact(emb, list(range(25)), 3)

    def test_bad_target(self, rng):
        emb = rng.normal(size=(4, 2))
        with pytest.raises(ConfigError):
            solve_exact(emb, [0, 1], 3)
        with pytest.raises(ConfigError):
            solve_exact(emb, [0, 1], 0)

    def test_empty_pool(self):
        with pytest.raises(ConfigError):
            solve_exact(np.eye(3), [], 1)

    def test_permutation_invariant_up_to_tie_break(self, rng):
        emb = rng.normal(size=(8, 4))
        a = solve_exact(emb, [0, 1, 2, 3, 4, 5, 6, 7], 3)
        b = solve_exact(emb, [7, 3, 5, 1, 6, 0, 2, 4], 3)
        assert a == b

    def test_optimum_matches_value_of_returned_subset(self, rng):
        for _ in range(20):
            n = int(rng.integers(3, 10))
            emb = rng.normal(size=(n, 3))
            target = int(rng.integers(2, n + 1))
            sol = solve_exact(emb, range(n), target)
            assert abs(sol.optimum - min_pair_dist(emb, sol.subset)) < 1e-12
