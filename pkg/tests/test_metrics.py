import numpy as np
import pytest

from vtprune import (
    ConfigError,
    Frame,
    ShapeMismatchError,
    SynthConfig,
    TraceHeader,
    episode_overlap_report,
    overlap_ratio,
    synthesize_trace,
)
from vtprune.metrics import default_k_values


class TestOverlapRatio:
    def test_identical_sets(self):
        assert overlap_ratio([1, 2, 3], [3, 2, 1]) == 1.0

    def test_disjoint_sets(self):
        assert overlap_ratio([0, 1], [2, 3]) == 0.0

    def test_half_overlap(self):
        assert overlap_ratio([0, 1, 2, 3], [2, 3, 4, 5]) == 0.5

    def test_size_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError):
            overlap_ratio([1, 2], [1, 2, 3])

    def test_symmetry_and_identity(self, rng):
        for _ in range(20):
            a = rng.choice(64, size=8, replace=False)
            b = rng.choice(64, size=8, replace=False)
            assert overlap_ratio(a, b) == overlap_ratio(b, a)
            assert (overlap_ratio(a, b) == 1.0) == (set(a.tolist()) == set(b.tolist()))


def scored_frames(score_rows, prefill_rows=None):
    """Build an in-memory SCORED episode from per-frame decode score vectors."""
    m = len(score_rows[0])
    header = TraceHeader(m_visual=m, n_text=2, layers=1, embed_dim=2)
    frames = []
    for t, row in enumerate(score_rows):
        pre = prefill_rows[t] if prefill_rows is not None else row
        frames.append(
            Frame(
                timestep=t,
                prefill=np.asarray(pre, dtype=np.float32),
                decode=np.asarray([row], dtype=np.float32),
                embeddings=np.ones((m, 2), dtype=np.float32),
            )
        )
    return header, frames


class TestEpisodeReport:
    def test_frozen_trace_consecutive_overlap_is_one(self):
        h = TraceHeader(m_visual=16, n_text=4, layers=2, embed_dim=4)
        frames = synthesize_trace(
            SynthConfig(seed=2, frames=8, drift_sigma=0.0, noise_sigma=0.0), h
        )
        report = episode_overlap_report(h, frames, k=4)
        assert report.decode_t_vs_tminus1 == tuple([1.0] * 7)

    def test_coincident_scores_give_full_stage_overlap(self, rng):
        rows = rng.uniform(size=(5, 12))
        header, frames = scored_frames(rows)  # prefill == decode scores
        report = episode_overlap_report(header, frames, k=3)
        assert report.prefill_vs_decode == tuple([1.0] * 5)

    def test_independent_scores_match_hypergeometric_mean(self):
        # E[|A ∩ B|]/k = k/M for independent uniform top-k sets
        m, k, frames_per_seed = 256, 32, 21
        means = []
        for seed in range(100):
            r = np.random.Generator(np.random.PCG64(seed))
            rows = r.uniform(size=(frames_per_seed, m))
            header, frames = scored_frames(rows)
            means.append(episode_overlap_report(header, frames, k).mean_decode_consecutive)
        grand = float(np.mean(means))
        assert abs(grand - k / m) < 0.03

    def test_two_frame_minimum(self):
        header, frames = scored_frames(np.eye(4)[:1])
        with pytest.raises(ConfigError):
            episode_overlap_report(header, frames, k=2)

    def test_report_dict_schema(self, rng):
        rows = rng.uniform(size=(4, 10))
        header, frames = scored_frames(rows)
        d = episode_overlap_report(header, frames, k=2).to_dict()
        assert set(d) == {"k", "prefill_vs_decode", "decode_t_vs_tminus1", "means"}
        assert len(d["prefill_vs_decode"]) == 4
        assert len(d["decode_t_vs_tminus1"]) == 3
        assert set(d["means"]) == {"prefill_vs_decode", "decode_t_vs_tminus1"}
        assert all(0.0 <= v <= 1.0 for v in d["prefill_vs_decode"])

    def test_default_k_fractions(self):
        assert default_k_values(256) == [32, 64, 128]
        assert default_k_values(8) == [1, 2, 4]


class TestShiftDip:
    def test_overlap_dips_at_shift_frames(self):
        # sign-of-effect: overlap at the jump frames is lower on average
        h = TraceHeader(m_visual=64, n_text=4, layers=1, embed_dim=4)
        at_shift, elsewhere = [], []
        for seed in range(100):
            cfg = SynthConfig(seed=seed, frames=30, drift_sigma=0.02, noise_sigma=0.02, shift_every=10)
            frames = synthesize_trace(cfg, h)
            rep = episode_overlap_report(h, frames, k=8)
            for t, v in enumerate(rep.decode_t_vs_tminus1):
                # pair index t compares frames t and t+1; a shift lands at t+1
                if (t + 1) % 10 == 0:
                    at_shift.append(v)
                else:
                    elsewhere.append(v)
        assert float(np.mean(at_shift)) < float(np.mean(elsewhere))
