import json

import numpy as np
import pytest

from hybridopt import cli, harness
from hybridopt.core import ConfigError, Sense, UsageError, dominates
from hybridopt.gd import NO_DIRECTION
from hybridopt.harness import (ComparisonRow, RunSpec, build_config, compare, execute, load_run,
                               normalize_error_ratio, pareto_table, read_pareto_csv, read_summary,
                               run_spec_from, write_pareto, write_run)
from hybridopt.results import read_trajectory_csv


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv(harness.OUTPUT_ENV, str(tmp_path))
    return tmp_path


@pytest.fixture(scope="module")
def blade_run():
    return execute(RunSpec("gedea", "blade_like", budget_evals=160, seed=4))


def strip_time(d):
    d = dict(d)
    d.pop("created_at")
    d.pop("elapsed_seconds")
    return d


# runs ------------------------------------------------------------------------------

def test_irw_193_evaluations_give_193_blocks():
    res = execute(RunSpec("irw", "fitting_like", budget_evals=193, batch=8))
    assert (res.total_evaluations, res.total_blocks) == (193, 193)
    assert res.ledger["batch_size"] == 1


def test_gd_stops_without_direction():
    res = execute(RunSpec("gd", "sphere", budget_evals=5000, batch=4))
    assert res.termination_reason == NO_DIRECTION
    assert res.final_scalar < 1e-8


def test_run_deterministic_up_to_timestamps(tmp_path):
    spec = RunSpec("asbec", "fitting_like", budget_evals=160, seed=7, noise=0.005)
    for name in ("a", "b"):
        write_run(execute(spec), tmp_path / name)
    a = json.loads((tmp_path / "a" / "run.json").read_text())
    b = json.loads((tmp_path / "b" / "run.json").read_text())
    assert strip_time(a) == strip_time(b)
    assert (tmp_path / "a" / "trajectory.csv").read_text() == \
        (tmp_path / "b" / "trajectory.csv").read_text()


def test_distinct_seeds_differ():
    a = execute(RunSpec("irw", "fitting_like", budget_evals=60, seed=1))
    b = execute(RunSpec("irw", "fitting_like", budget_evals=60, seed=2))
    assert a.trajectory != b.trajectory


def test_run_json_and_trajectory_roundtrip(tmp_path):
    res = execute(RunSpec("gd", "quadratic", budget_evals=80, batch=4))
    write_run(res, tmp_path)
    back = load_run(tmp_path)
    assert back.to_dict() == res.to_dict()
    assert read_trajectory_csv(tmp_path / "trajectory.csv") == res.trajectory
    with pytest.raises(UsageError):
        load_run(tmp_path / "missing")


# compare ---------------------------------------------------------------------------

def test_compare_aggregates_match_run_files(tmp_path):
    spec = RunSpec("irw", "fitting_like", budget_evals=40, seed=10)
    rows = compare([spec], 6, tmp_path)
    row = rows[0]
    runs = [load_run(tmp_path / "irw" / f"seed_{10 + i}") for i in range(6)]
    finals = [r.final_scalar for r in runs]
    assert row.repeats == 6 and not row.degenerate
    assert row.mean_final == pytest.approx(np.mean(finals), rel=1e-15)
    assert row.std_final == pytest.approx(np.std(finals, ddof=1), rel=1e-12)
    assert row.mean_total_evals == np.mean([r.total_evaluations for r in runs])
    assert row.mean_blocks * row.batch_size == row.mean_total_evals
    back = read_summary(tmp_path / "summary.csv")[0]
    for name in ("mean_total_evals", "batch_size", "mean_blocks", "mean_final", "std_final",
                 "mean_seconds"):
        assert getattr(back, name) == getattr(row, name)
    assert json.loads((tmp_path / "summary.json").read_text())[0]["repeats"] == 6


def test_single_repeat_is_degenerate(tmp_path):
    rows = compare([RunSpec("asbec", "sphere", budget_evals=32)], 1, tmp_path)
    assert rows[0].std_final == 0.0 and rows[0].degenerate
    with pytest.raises(ConfigError):
        compare([RunSpec("asbec", "sphere", budget_evals=32)], 0, tmp_path)
    with pytest.raises(UsageError):
        ComparisonRow.from_results("x", [])


# pareto ----------------------------------------------------------------------------

def test_pareto_original_weights_top_is_best(blade_run):
    header, members, sums = pareto_table(blade_run)
    assert header == ["x0", "x1", "x2", "x3", "x4", "x5", "eta", "area_obj", "mc_obj",
                      "weighted_sum"]
    assert sums == sorted(sums, reverse=True)
    assert sums[0] == pytest.approx(max(blade_run.scalarizer(r.report) for r in blade_run.pareto))
    assert members[0].scalar == pytest.approx(sums[0])


def test_pareto_reweigh_picks_argmax_and_rows_nondominated(blade_run, tmp_path):
    _, members, _ = pareto_table(blade_run, (1, 0, 0))
    eta = [r.report.values[0] for r in blade_run.pareto]
    assert members[0].report.values[0] == max(eta)
    header, rows = read_pareto_csv(_pareto_file(blade_run, tmp_path))
    objs = rows[:, 6:9]
    for a in objs:
        for b in objs:
            assert not dominates(b, a, Sense.MAXIMIZE)
    assert np.allclose(objs.sum(axis=1), rows[:, -1])
    with pytest.raises(ConfigError):
        pareto_table(blade_run, (1, 0))


def _pareto_file(result, tmp_path):
    path = tmp_path / "pareto.csv"
    write_pareto(result, path)
    return path


def test_pareto_mono_objective_rejected():
    res = execute(RunSpec("gd", "sphere", budget_evals=20, batch=4))
    with pytest.raises(UsageError):
        pareto_table(res)


# small helpers and configuration ---------------------------------------------------

@pytest.mark.parametrize("value,ref,want", [(1.0, 1.25, 0.8), (2.5, 1.25, 2.0), (0.0, 3.0, 0.0)])
def test_normalize_error_ratio(value, ref, want):
    assert normalize_error_ratio(value, ref) == pytest.approx(want)


def test_normalize_error_ratio_rejects_bad_reference():
    with pytest.raises(ConfigError):
        normalize_error_ratio(1.0, 0.0)


def test_config_errors_name_the_key(tmp_path):
    with pytest.raises(ConfigError, match="step_sigma_x"):
        build_config("irw", {"step_sigma_x": "0.1"})
    with pytest.raises(ConfigError, match="colony_size"):
        build_config("asbec", {"colony_size": "many"})
    with pytest.raises(ConfigError, match="bogus"):
        run_spec_from({"run": {"bogus": "1"}}, algo="gd", problem="sphere")
    cfg = build_config("loh_ann", {"epochs": "12", "cycles": "2"})
    assert cfg.ann.epochs == 12 and cfg.cycles == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[nosuch]\nx = 1\n")
    with pytest.raises(ConfigError, match="nosuch"):
        harness.read_config(bad)


def test_run_spec_validation():
    with pytest.raises(UsageError):
        RunSpec("simplex", "sphere", budget_evals=10)
    with pytest.raises(UsageError):
        RunSpec("gd", "nope", budget_evals=10)
    with pytest.raises(ConfigError):
        RunSpec("gd", "sphere")
    with pytest.raises(ConfigError):
        execute(RunSpec("gd", "sphere", budget_evals=10, noise=0.1))


def test_config_file_drives_run(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[run]\nalgo = irw\nproblem = sphere\nbudget_evals = 30\nseed = 3\n"
                   "[irw]\nstep_sigma = 0.05\n")
    sections = harness.read_config(ini)
    spec = run_spec_from(sections)
    res = execute(spec, sections)
    assert res.seed == 3 and res.total_evaluations == 30
    assert res.config["step_sigma"] == 0.05


# CLI -------------------------------------------------------------------------------

def test_cli_run_and_pareto(out, capsys):
    assert cli.main(["run", "--algo", "gedea", "--problem", "blade_like", "--budget-evals", "64",
                     "--seed", "1"]) == 0
    run_dir = out / "runs" / "gedea" / "blade_like" / "seed_1"
    assert (run_dir / "run.json").exists() and (run_dir / "trajectory.csv").exists()
    assert cli.main(["pareto", str(run_dir), "--reweigh", "1,0,0"]) == 0
    header, rows = read_pareto_csv(run_dir / "pareto.csv")
    assert rows[0, header.index("eta")] == rows[:, header.index("eta")].max()
    assert "front members" in capsys.readouterr().out


def test_cli_compare_and_bench(out, capsys):
    assert cli.main(["compare", "--algo", "irw", "--algo", "gd", "--problem", "sphere",
                     "--budget-evals", "24", "--repeats", "2"]) == 0
    rows = read_summary(out / "compare" / "sphere" / "summary.csv")
    assert [r.algorithm for r in rows] == ["irw", "gd"]
    assert cli.main(["bench", "list"]) == 0
    assert cli.main(["bench", "describe", "fitting_like"]) == 0
    text = capsys.readouterr().out
    assert "blade_like" in text and '"name": "fitting_like"' in text


@pytest.mark.parametrize("argv", [
    ["run", "--algo", "simplex", "--problem", "sphere", "--budget-evals", "5"],
    ["run", "--algo", "gd", "--problem", "sphere"],
    ["bench", "describe"],
    ["frobnicate"],
])
def test_cli_usage_errors_exit_2(out, argv, capsys):
    assert cli.main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_cli_config_error_exit_2(out, tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[gd]\nunknown_knob = 3\n")
    assert cli.main(["run", "--algo", "gd", "--problem", "sphere", "--budget-evals", "8",
                     "--config", str(ini)]) == 2


def test_cli_pareto_mono_objective_exit_2(out):
    assert cli.main(["run", "--algo", "gd", "--problem", "sphere", "--budget-evals", "8"]) == 0
    assert cli.main(["pareto", str(out / "runs" / "gd" / "sphere" / "seed_0")]) == 2


def test_cli_runtime_failure_exit_3(out, capsys):
    broken = out / "broken"
    broken.mkdir()
    (broken / "run.json").write_text("{not json")
    assert cli.main(["pareto", str(broken)]) == 3
    assert "runtime failure" in capsys.readouterr().err
