import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtprune import ConfigError, EstimatorConfig, EstimatorState, ShapeMismatchError, SmoothingMode


def ema_state(alpha):
    return EstimatorState(EstimatorConfig(mode=SmoothingMode.EMA, alpha=alpha))


def window_state(window=3, gamma=0.8):
    return EstimatorState(EstimatorConfig(window=window, gamma=gamma))


class TestObserve:
    def test_first_observation(self):
        s = window_state()
        s.observe(np.array([1.0, 2.0]))
        assert s.frames_seen == 1
        assert len(s.history) == 1
        np.testing.assert_array_equal(s.history[0], [1.0, 2.0])

    def test_eviction_keeps_last_w_in_order(self):
        s = window_state(window=3)
        for i in range(4):
            s.observe(np.array([float(i)]))
        assert [float(v[0]) for v in s.history] == [1.0, 2.0, 3.0]
        assert s.frames_seen == 4

    def test_length_mismatch_rejected(self):
        s = window_state()
        s.observe(np.zeros(4))
        with pytest.raises(ShapeMismatchError):
            s.observe(np.zeros(5))

    def test_observe_copies_input(self):
        s = window_state()
        v = np.array([1.0, 2.0])
        s.observe(v)
        v[0] = 99.0
        assert s.history[0][0] == 1.0


class TestEma:
    def test_two_step_hand_arithmetic(self):
        s = ema_state(alpha=0.5)
        s.observe(np.array([0.2]))
        s.observe(np.array([0.6]))
        # 0.5 * 0.2 + 0.5 * 0.6
        np.testing.assert_allclose(s.ema_estimate(), [0.4])

    def test_vector_hand_arithmetic(self):
        s = ema_state(alpha=0.5)
        s.observe(np.array([0.2, 0.8]))
        s.observe(np.array([0.4, 0.6]))
        np.testing.assert_allclose(s.ema_estimate(), [0.3, 0.7])

    def test_alpha_one_tracks_last_observation(self):
        s = ema_state(alpha=1.0)
        for v in ([0.1, 0.9], [0.5, 0.5], [0.8, 0.2]):
            s.observe(np.array(v))
        np.testing.assert_array_equal(s.ema_estimate(), [0.8, 0.2])

    def test_alpha_zero_frozen_at_first_observation(self):
        s = ema_state(alpha=0.0)
        s.observe(np.array([0.3, 0.7]))
        for v in ([0.9, 0.1], [0.0, 1.0]):
            s.observe(np.array(v))
        np.testing.assert_array_equal(s.ema_estimate(), [0.3, 0.7])

    def test_estimate_before_any_observation_errors(self):
        with pytest.raises(ConfigError):
            ema_state(0.5).ema_estimate()

    @given(
        alpha=st.floats(0.0, 1.0),
        n=st.integers(1, 12),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60, deadline=None)
    def test_convex_combination_bound(self, alpha, n, seed):
        r = np.random.Generator(np.random.PCG64(seed))
        obs = r.uniform(size=(n, 5))
        s = ema_state(alpha)
        for v in obs:
            s.observe(v)
        est = s.ema_estimate()
        assert (est >= obs.min(axis=0) - 1e-12).all()
        assert (est <= obs.max(axis=0) + 1e-12).all()


class TestWindow:
    def test_w1_is_gamma_times_last(self):
        s = window_state(window=1, gamma=0.8)
        s.observe(np.array([0.5, 1.0]))
        s.observe(np.array([0.25, 0.5]))
        np.testing.assert_allclose(s.window_estimate(), [0.2, 0.4])

    def test_constant_history_matches_hand_sum(self):
        # 0.8 + 0.8^2 + 0.8^3 = 1.952 with the default window/decay
        s = window_state(window=3, gamma=0.8)
        for _ in range(3):
            s.observe(np.array([1.0]))
        np.testing.assert_allclose(s.window_estimate(), [1.952])

    def test_gamma_zero_gives_zero_vector(self):
        s = window_state(window=3, gamma=0.0)
        for v in ([1.0, 2.0], [3.0, 4.0]):
            s.observe(np.array(v))
        np.testing.assert_array_equal(s.window_estimate(), [0.0, 0.0])

    def test_truncates_to_available_history(self):
        s = window_state(window=3, gamma=0.5)
        s.observe(np.array([1.0]))
        np.testing.assert_allclose(s.window_estimate(), [0.5])
        s.observe(np.array([1.0]))
        np.testing.assert_allclose(s.window_estimate(), [0.75])

    def test_recency_weighting_order(self):
        s = window_state(window=2, gamma=0.5)
        s.observe(np.array([1.0]))  # older, weight gamma^2
        s.observe(np.array([2.0]))  # newer, weight gamma^1
        np.testing.assert_allclose(s.window_estimate(), [0.5 * 2.0 + 0.25 * 1.0])

    def test_estimate_before_any_observation_errors(self):
        with pytest.raises(ConfigError):
            window_state().window_estimate()

    @given(c=st.floats(0.01, 100), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_homogeneous_in_history_scale(self, c, seed):
        r = np.random.Generator(np.random.PCG64(seed))
        obs = r.uniform(size=(4, 6))
        s1, s2 = window_state(), window_state()
        for v in obs:
            s1.observe(v)
            s2.observe(c * v)
        e1, e2 = s1.window_estimate(), s2.window_estimate()
        np.testing.assert_allclose(c * e1, e2, rtol=1e-9)
        # hence top-k of the estimate is invariant under uniform scaling
        assert np.argsort(-e1, kind="stable").tolist() == np.argsort(-e2, kind="stable").tolist()


class TestWarmth:
    @pytest.mark.parametrize("seen,w,expect", [(0, 3, False), (2, 3, False), (3, 3, True), (5, 3, True)])
    def test_is_warm(self, seen, w, expect):
        s = window_state(window=w)
        for i in range(seen):
            s.observe(np.ones(2))
        assert s.is_warm() is expect

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            EstimatorConfig(alpha=1.5)
        with pytest.raises(ConfigError):
            EstimatorConfig(gamma=-0.1)
        with pytest.raises(ConfigError):
            EstimatorConfig(window=0)

    def test_mode_accepts_plain_strings(self):
        assert EstimatorConfig(mode="ema").mode is SmoothingMode.EMA
        assert EstimatorConfig(mode="window").mode is SmoothingMode.DECAY_WINDOW
        with pytest.raises(ValueError):
            EstimatorConfig(mode="sliding")

    def test_deterministic_given_state_and_config(self, rng):
        obs = rng.uniform(size=(5, 8))
        runs = []
        for _ in range(2):
            s = window_state()
            for v in obs:
                s.observe(v)
            runs.append(s.window_estimate())
        np.testing.assert_array_equal(runs[0], runs[1])
