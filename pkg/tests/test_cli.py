import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from mnarx import (
    FieldSequence,
    ManifoldPlan,
    ModelStage,
    dct2_inverse,
    plan_to_dict,
    read_series,
    write_fields,
)
from mnarx.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def dir_digest(path):
    out = {}
    for p in sorted(Path(path).rglob("*")):
        if p.is_file():
            out[str(p.relative_to(path))] = p.read_bytes()
    return out


SIM_ARGS = ["--runs", "2", "--seed", "5", "--dt", "0.01", "--duration", "2.0"]


def test_simulate_writes_runs_and_manifest(tmp_path, runner):
    out = tmp_path / "ed"
    result = runner.invoke(cli, ["simulate", *SIM_ARGS, "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert sorted(p.name for p in out.glob("run_*.csv")) == ["run_000.csv", "run_001.csv"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["config"]["seed"] == 5
    assert len(manifest["config_hash"]) == 64
    series = read_series(out / "run_000")
    assert series.channel_names == ("x", "y1", "y2")
    assert series.n_steps == 201


def test_simulate_rejects_zero_runs(tmp_path, runner):
    result = runner.invoke(cli, ["simulate", "--runs", "0", "--seed", "1",
                                 "--out", str(tmp_path / "ed")])
    assert result.exit_code == 2
    assert "runs" in result.output


def test_simulate_is_byte_identical_across_reruns(tmp_path, runner):
    for sub in ("a", "b"):
        result = runner.invoke(cli, ["simulate", *SIM_ARGS,
                                     "--out", str(tmp_path / sub)])
        assert result.exit_code == 0
    assert dir_digest(tmp_path / "a") == dir_digest(tmp_path / "b")


def test_seed_env_fallback(tmp_path, runner):
    a = runner.invoke(cli, ["simulate", "--runs", "1", "--duration", "1.0",
                            "--out", str(tmp_path / "env")],
                      env={"MNARX_SEED": "5"})
    assert a.exit_code == 0
    b = runner.invoke(cli, ["simulate", "--runs", "1", "--duration", "1.0",
                            "--seed", "5", "--out", str(tmp_path / "flag")])
    assert b.exit_code == 0
    assert (tmp_path / "env" / "run_000.csv").read_bytes() \
        == (tmp_path / "flag" / "run_000.csv").read_bytes()


def chain_plan_payload():
    plan = ManifoldPlan(
        raw_channels=("x",),
        stages=(ModelStage("y1", narx=dict(
            ar_lags=(1, 2, 3), exo_lags={"x": (0, 1, 2)}, degree=1)),),
        final=ModelStage("y2", narx=dict(
            ar_lags=(1, 2, 3), exo_lags={"x": (0, 1), "y1": (0, 1, 2)}, degree=1)),
    )
    return plan_to_dict(plan)


def make_ed(tmp_path, runner, runs=3):
    ed = tmp_path / "ed"
    result = runner.invoke(cli, ["simulate", "--runs", str(runs), "--seed", "5",
                                 "--duration", "2.0", "--out", str(ed)])
    assert result.exit_code == 0, result.output
    return ed


def test_train_spring_plan_writes_two_models(tmp_path, runner):
    ed = make_ed(tmp_path, runner)
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(chain_plan_payload()))
    out = tmp_path / "trained"
    result = runner.invoke(cli, ["train", "--plan", str(plan_path),
                                 "--ed", str(ed), "--out", str(out)])
    assert result.exit_code == 0, result.output
    model_files = sorted(p.name for p in out.glob("*.json"))
    assert "stage_y1.json" in model_files and "final.json" in model_files
    reports = json.loads((out / "fit_reports.json").read_text())
    assert reports["y1"]["n_coefficients"] == 6
    assert reports["final"]["n_coefficients"] == 8


def test_train_empty_plan_single_model(tmp_path, runner):
    ed = make_ed(tmp_path, runner)
    payload = chain_plan_payload()
    payload["stages"] = []
    payload["final"]["narx"]["exo_lags"] = [["x", [0, 1]]]
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(payload))
    out = tmp_path / "trained"
    result = runner.invoke(cli, ["train", "--plan", str(plan_path),
                                 "--ed", str(ed), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert not list(out.glob("stage_*.json"))
    assert (out / "final.json").exists()


def test_train_unknown_channel_exits_2_with_stage_name(tmp_path, runner):
    ed = make_ed(tmp_path, runner)
    payload = chain_plan_payload()
    payload["final"]["narx"]["exo_lags"] = [["ghost", [0]]]
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(payload))
    result = runner.invoke(cli, ["train", "--plan", str(plan_path),
                                 "--ed", str(ed), "--out", str(tmp_path / "t")])
    assert result.exit_code == 2
    assert "y2" in result.output and "ghost" in result.output


def test_predict_and_dt_mismatch(tmp_path, runner):
    ed = make_ed(tmp_path, runner)
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(chain_plan_payload()))
    trained = tmp_path / "trained"
    assert runner.invoke(cli, ["train", "--plan", str(plan_path), "--ed", str(ed),
                               "--out", str(trained)]).exit_code == 0

    out = tmp_path / "pred"
    result = runner.invoke(cli, ["predict", "--model", str(trained),
                                 "--input", str(ed / "run_000"),
                                 "--init", str(ed / "run_000"),
                                 "--out", str(out)])
    assert result.exit_code == 0, result.output
    prediction = read_series(out / "prediction")
    truth = read_series(ed / "run_000")
    assert prediction.n_steps == truth.n_steps
    assert (out / "trace_y1.csv").exists()
    # initialized from truth, so the first steps match exactly
    assert np.array_equal(prediction.values[:3, 0], truth.channel("y2")[:3])

    # a series with a different dt is rejected before prediction
    mismatched = tmp_path / "bad"
    r = runner.invoke(cli, ["simulate", "--runs", "1", "--seed", "5",
                            "--dt", "0.02", "--duration", "2.0",
                            "--out", str(mismatched)])
    assert r.exit_code == 0
    result = runner.invoke(cli, ["predict", "--model", str(trained),
                                 "--input", str(mismatched / "run_000"),
                                 "--out", str(tmp_path / "pred2")])
    assert result.exit_code == 2
    assert "dt" in result.output


def test_evaluate_writes_report(tmp_path, runner):
    ed = make_ed(tmp_path, runner, runs=3)
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(chain_plan_payload()))
    trained = tmp_path / "trained"
    assert runner.invoke(cli, ["train", "--plan", str(plan_path), "--ed", str(ed),
                               "--out", str(trained)]).exit_code == 0
    val = tmp_path / "val"
    assert runner.invoke(cli, ["simulate", "--runs", "2", "--seed", "9",
                               "--duration", "2.0", "--out", str(val)]).exit_code == 0
    out = tmp_path / "eval"
    result = runner.invoke(cli, ["evaluate", "--model", str(trained),
                                 "--validation", str(val), "--out", str(out)])
    assert result.exit_code == 0, result.output
    payload = json.loads((out / "report.json").read_text())
    assert payload["y2"]["methods"]["mnarx"]["n_traces"] == 2


def test_reduce_synthetic_fields(tmp_path, runner):
    rng = np.random.default_rng(0)
    base = np.zeros((19, 19))
    base[1, 1] = 1.0
    mode = dct2_inverse(base)
    frames = rng.normal(size=6)[:, None, None] * mode[None, :, :]
    write_fields(FieldSequence(0.05, 0.0, frames), tmp_path / "fields")
    out = tmp_path / "modes"
    result = runner.invoke(cli, ["reduce", "--fields", str(tmp_path / "fields"),
                                 "--keep", "3x3", "--out", str(out)])
    assert result.exit_code == 0, result.output
    series = read_series(out)
    assert series.n_channels == 9
    assert series.channel_names[0] == "mode_0_0"

    bad = runner.invoke(cli, ["reduce", "--fields", str(tmp_path / "fields"),
                              "--keep", "wide", "--out", str(out)])
    assert bad.exit_code == 2


def test_config_file_overrides_flags(tmp_path, runner):
    config = tmp_path / "override.json"
    config.write_text(json.dumps({"seed": 5}))
    flagged = runner.invoke(cli, ["simulate", "--runs", "1", "--seed", "99",
                                  "--duration", "1.0", "--config", str(config),
                                  "--out", str(tmp_path / "cfg")])
    assert flagged.exit_code == 0, flagged.output
    plain = runner.invoke(cli, ["simulate", "--runs", "1", "--seed", "5",
                                "--duration", "1.0",
                                "--out", str(tmp_path / "plain")])
    assert plain.exit_code == 0
    assert (tmp_path / "cfg" / "run_000.csv").read_bytes() \
        == (tmp_path / "plain" / "run_000.csv").read_bytes()

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"sede": 5}))
    result = runner.invoke(cli, ["simulate", "--runs", "1", "--config", str(bad),
                                 "--out", str(tmp_path / "x")])
    assert result.exit_code == 2
    assert "sede" in result.output


def test_predict_numeric_blowup_exits_3(tmp_path, runner):
    ed = make_ed(tmp_path, runner)
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(chain_plan_payload()))
    trained = tmp_path / "trained"
    assert runner.invoke(cli, ["train", "--plan", str(plan_path), "--ed", str(ed),
                               "--out", str(trained)]).exit_code == 0
    # doctor the y1 stage into an explosive excitation-driven recurrence
    payload = json.loads((trained / "stage_y1.json").read_text())
    payload["coefficients"] = [3.0, 0.0, 0.0, 1.0, 0.0, 0.0]
    payload["scaler_mean"] = [0.0] * 6
    payload["scaler_scale"] = [1.0] * 6
    payload["target_shift"] = 0.0
    payload["blowup_factor"] = 10.0
    (trained / "stage_y1.json").write_text(json.dumps(payload))
    result = runner.invoke(cli, ["predict", "--model", str(trained),
                                 "--input", str(ed / "run_000"),
                                 "--out", str(tmp_path / "pred")])
    assert result.exit_code == 3
    assert "y1" in result.output


def test_bench_threads_do_not_change_outputs(tmp_path, runner):
    args = ["bench", "--seed", "4", "--runs", "2", "--validation", "3",
            "--duration", "2.0"]
    a = runner.invoke(cli, [*args, "--out", str(tmp_path / "one")])
    b = runner.invoke(cli, [*args, "--threads", "4", "--out", str(tmp_path / "two")])
    assert a.exit_code == 0 and b.exit_code == 0
    assert dir_digest(tmp_path / "one") == dir_digest(tmp_path / "two")


def test_bench_small_end_to_end(tmp_path, runner):
    out = tmp_path / "bench"
    result = runner.invoke(cli, [
        "bench", "--seed", "3", "--runs", "2", "--validation", "2",
        "--duration", "2.0", "--out", str(out), "--no-traces",
    ])
    assert result.exit_code == 0, result.output
    for name in ("report.json", "scatter.csv", "hist.csv", "manifest.json"):
        assert (out / name).exists()
    payload = json.loads((out / "report.json").read_text())
    assert set(payload) == {"y1", "y2"}
    assert set(payload["y2"]["methods"]) == {"narx", "mnarx"}
