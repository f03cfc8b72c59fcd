import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from epicontrol.cli import main

TINY = {"preset": "desk", "t_horizon": 30, "warmup_days": 20, "horizon": 20,
        "k_draws": 3, "episodes": 60, "n_theta": 16, "n_x": 12,
        "replicates": 2, "seed": 11}


@pytest.fixture()
def runner():
    return CliRunner()


def _cfg_file(tmp_path, **extra):
    doc = dict(TINY)
    doc.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


class TestRunCommand:
    def test_run_random_writes_outputs(self, runner, tmp_path):
        cfg = _cfg_file(tmp_path, planner="random")
        out = tmp_path / "out"
        res = runner.invoke(main, ["run", "--config", str(cfg), "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert (out / "metrics.csv").exists()
        assert (out / "metrics.json").exists()
        assert (out / "plots.json").exists()
        assert (out / "trace_random_r0.csv").exists()
        assert (out / "trace_random_r1.csv").exists()
        plots = json.loads((out / "plots.json").read_text())
        assert len(plots["icu"]["replicates"]) == 2
        assert len(plots["icu"]["mean"]) == 30

    def test_cli_flags_override_config(self, runner, tmp_path):
        cfg = _cfg_file(tmp_path, planner="random")
        out = tmp_path / "out2"
        res = runner.invoke(main, ["run", "--config", str(cfg),
                                   "--planner", "historical",
                                   "--kappa-soec", "0.8",
                                   "--replicates", "1",
                                   "--seed", "7", "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert (out / "trace_historical_r0.csv").exists()
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics[0]["planner"] == "historical"
        assert metrics[0]["n_replicates"] == 1

    def test_qlearn_run_emits_convergence_curves(self, runner, tmp_path):
        cfg = _cfg_file(tmp_path, planner="qlearn", episodes=40)
        out = tmp_path / "outq"
        res = runner.invoke(main, ["run", "--config", str(cfg),
                                   "--replicates", "1", "--out", str(out)])
        assert res.exit_code == 0, res.output
        plots = json.loads((out / "plots.json").read_text())
        curves = plots["max_delta_curves"]["0"]
        assert len(curves) == 3  # one per block
        assert all(len(v) >= 1 for v in curves.values())


class TestFitValidate:
    def test_fit_then_validate_on_sample_data(self, runner, tmp_path):
        cfg = _cfg_file(tmp_path, data_dir="data/sample", n_theta=20, n_x=12,
                        warmup_days=60)
        fit_out = tmp_path / "fit"
        res = runner.invoke(main, ["fit", "--config", str(cfg),
                                   "--out", str(fit_out)])
        assert res.exit_code == 0, res.output
        gen = fit_out / "generator.npz"
        assert gen.exists()
        summary = json.loads((fit_out / "fit_summary.json").read_text())
        assert len(summary["theta_mean"]) == 4

        val_out = tmp_path / "val"
        res = runner.invoke(main, ["validate", "--config", str(cfg),
                                   "--generator", str(gen),
                                   "--out", str(val_out), "--n-paths", "40"])
        assert res.exit_code == 0, res.output
        doc = json.loads((val_out / "validation.json").read_text())
        assert len(doc["mean"]) == len(doc["observed"])

    def test_fit_requires_data_dir(self, runner, tmp_path):
        cfg = _cfg_file(tmp_path)
        res = runner.invoke(main, ["fit", "--config", str(cfg)])
        assert res.exit_code != 0
        assert "data_dir" in res.output


class TestSummarize:
    def test_summarize_traces(self, runner, tmp_path):
        cfg = _cfg_file(tmp_path, planner="random")
        out = tmp_path / "out"
        runner.invoke(main, ["run", "--config", str(cfg), "--out", str(out)])
        res = runner.invoke(main, [
            "summarize", str(out / "trace_random_r0.csv"),
            str(out / "trace_random_r1.csv"), "--preset", "desk",
            "--out", str(tmp_path / "sum")])
        assert res.exit_code == 0, res.output
        metrics = json.loads((tmp_path / "sum" / "metrics.json").read_text())
        assert metrics[0]["n_replicates"] == 2


class TestBenchmark:
    def test_benchmark_emits_table_and_json(self, runner, tmp_path):
        out = tmp_path / "bench.json"
        res = runner.invoke(main, ["benchmark", "--json", str(out)])
        assert res.exit_code == 0, res.output
        assert "rollout" in res.output
        rows = json.loads(out.read_text())
        cases = {r["case"] for r in rows}
        assert any("step" in c for c in cases)
        assert any("pf" in c for c in cases)
