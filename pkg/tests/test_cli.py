import json
import subprocess
import sys

import numpy as np
import pytest

from vtprune import EstimatorConfig, PruneConfig, Variant, run_prune
from vtprune.cli import main


def run_cli(*argv):
    proc = subprocess.run(
        [sys.executable, "-m", "vtprune", *map(str, argv)],
        capture_output=True,
        text=True,
    )
    return proc


@pytest.fixture(scope="module")
def small_trace(tmp_path_factory):
    path = tmp_path_factory.mktemp("traces") / "ep.vlat"
    rc = main(
        ["gen", "--seed", "3", "--frames", "16", "--m", "32", "--n", "8", "--out", str(path)]
    )
    assert rc == 0
    return path


class TestGen:
    def test_writes_trace(self, tmp_path):
        out = tmp_path / "t.vlat"
        rc = main(["gen", "--seed", "1", "--frames", "4", "--m", "8", "--n", "2", "--out", str(out)])
        assert rc == 0 and out.exists()

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a.vlat", tmp_path / "b.vlat"
        argv = ["gen", "--seed", "5", "--frames", "6", "--m", "8", "--n", "2"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestPrune:
    def test_manifest_budget(self, small_trace, tmp_path, capsys):
        out = tmp_path / "m.json"
        rc = main(
            ["prune", "--trace", str(small_trace), "--ratio", "0.5", "--out", str(out)]
        )
        assert rc == 0
        manifest = json.loads(out.read_text())
        for row in manifest["frames"]:
            if not row["warmup_applied"]:
                assert len(row["retained"]) == 16

    def test_variants_share_checksum_but_differ_in_selection(self, small_trace, tmp_path):
        outs = {}
        for variant in ("dual", "prefill-only"):
            out = tmp_path / f"{variant}.json"
            rc = main(
                [
                    "prune", "--trace", str(small_trace), "--ratio", "0.25",
                    "--variant", variant, "--out", str(out),
                ]
            )
            assert rc == 0
            outs[variant] = json.loads(out.read_text())
        assert outs["dual"]["trace"]["sha256"] == outs["prefill-only"]["trace"]["sha256"]
        assert outs["dual"]["frames"] != outs["prefill-only"]["frames"]

    def test_matches_library_call(self, small_trace, tmp_path):
        out = tmp_path / "m.json"
        main(["prune", "--trace", str(small_trace), "--budget", "8", "--out", str(out)])
        cli_manifest = json.loads(out.read_text())
        lib_manifest = run_prune(small_trace, PruneConfig(budget=8), EstimatorConfig())
        assert cli_manifest["frames"] == lib_manifest["frames"]

    def test_m256_eighth_ratio_budget_and_flops_field(self, tmp_path):
        trace = tmp_path / "m256.vlat"
        out = tmp_path / "m256.json"
        assert main(["gen", "--seed", "11", "--frames", "8", "--m", "256", "--out", str(trace)]) == 0
        assert main(["prune", "--trace", str(trace), "--ratio", "0.125", "--out", str(out)]) == 0
        manifest = json.loads(out.read_text())
        post_warmup = [r for r in manifest["frames"] if not r["warmup_applied"]]
        assert post_warmup and all(len(r["retained"]) == 32 for r in post_warmup)
        assert abs(manifest["aggregates"]["flops_ratio"] - 0.2996) < 0.025

    def test_missing_trace_is_data_error(self, tmp_path):
        rc = main(["prune", "--trace", str(tmp_path / "absent.vlat")])
        assert rc == 2

    def test_corrupt_trace_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.vlat"
        bad.write_text("not a header\n")
        assert main(["prune", "--trace", str(bad)]) == 2


class TestAnalyze:
    def test_report_schema(self, small_trace, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["analyze", "--trace", str(small_trace), "--k", "4", "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert [r["k"] for r in report["reports"]] == [4]
        r0 = report["reports"][0]
        assert len(r0["prefill_vs_decode"]) == 16
        assert len(r0["decode_t_vs_tminus1"]) == 15

    def test_default_k_sweep(self, small_trace):
        proc = run_cli("analyze", "--trace", str(small_trace))
        assert proc.returncode == 0
        report = json.loads(proc.stdout)
        assert [r["k"] for r in report["reports"]] == [4, 8, 16]


class TestFlops:
    def test_no_prune_ratio_is_one(self):
        proc = run_cli("flops", "--ratio", "1.0", "--n-text", "45")
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["ratio"] == 1.0

    def test_overhead_section(self):
        proc = run_cli("flops", "--ratio", "0.25", "--n-text", "45", "--overhead")
        out = json.loads(proc.stdout)
        assert out["selection_overhead"]["fraction_of_full"] < 0.01


class TestOracle:
    def test_four_angle_instance(self, tmp_path):
        angles = np.deg2rad([0, 10, 90, 180])
        emb = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        path = tmp_path / "emb.json"
        path.write_text(json.dumps(emb.tolist()))
        proc = run_cli("oracle", "--embeddings", str(path), "--target", "2")
        assert proc.returncode == 0
        sol = json.loads(proc.stdout)
        assert sol["subset"] == [0, 3]
        assert abs(sol["optimum"] - 2.0) < 1e-9

    def test_npy_input_with_pool(self, tmp_path):
        emb = np.eye(5)
        path = tmp_path / "emb.npy"
        np.save(path, emb)
        proc = run_cli(
            "oracle", "--embeddings", str(path), "--pool", "0", "2", "4", "--target", "2"
        )
        sol = json.loads(proc.stdout)
        assert sol["subset"] == [0, 2]  # all orthogonal, lexicographic tie-break


class TestBench:
    def test_smoke_run_reports_latency(self):
        rc_out = run_cli("bench", "--m", "64", "--frames", "20")
        assert rc_out.returncode == 0
        stats = json.loads(rc_out.stdout)["per_frame_selection"]["64"]
        assert stats["frames"] == 20 and stats["mean_ms"] > 0


class TestExitCodes:
    def test_usage_error_is_exit_1(self):
        proc = run_cli("prune")  # missing required --trace
        assert proc.returncode == 1

    def test_unknown_command_is_exit_1(self):
        proc = run_cli("frobnicate")
        assert proc.returncode == 1

    def test_gen_requires_seed(self, tmp_path):
        proc = run_cli("gen", "--frames", "2", "--out", str(tmp_path / "x.vlat"))
        assert proc.returncode == 1


class TestDeterminism:
    def test_gen_prune_analyze_twice_identical_modulo_timings(self, tmp_path):
        manifests, reports = [], []
        for run in ("one", "two"):
            d = tmp_path / run
            d.mkdir()
            trace = d / "t.vlat"
            man = d / "m.json"
            rep = d / "r.json"
            assert main(["gen", "--seed", "77", "--frames", "20", "--m", "32", "--n", "8",
                         "--out", str(trace)]) == 0
            assert main(["prune", "--trace", str(trace), "--ratio", "0.25",
                         "--out", str(man)]) == 0
            assert main(["analyze", "--trace", str(trace), "--k", "8",
                         "--out", str(rep)]) == 0
            m = json.loads(man.read_text())
            m.pop("timings")
            m["trace"].pop("path")
            manifests.append(json.dumps(m, sort_keys=True))
            r = json.loads(rep.read_text())
            r.pop("trace")
            reports.append(json.dumps(r, sort_keys=True))
        assert manifests[0] == manifests[1]
        assert reports[0] == reports[1]
