"""Front-end behavior: exit codes, file outputs, seed precedence."""

from dataclasses import replace

import pytest

from bdrelab.cli import main
from bdrelab.config import Experiment, ExperimentConfig, write_config
from bdrelab.results import read_results_csv


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_subcommand_is_a_config_error(capsys):
    code, _, _ = run(capsys, ["frobnicate"])
    assert code == 2


def test_no_arguments_is_a_config_error(capsys):
    code, _, _ = run(capsys, [])
    assert code == 2


def test_specfun_psi_at_one(capsys):
    code, out, _ = run(capsys, ["specfun", "--psi", "--a", "1"])
    assert code == 0
    line = out.splitlines()[1]
    assert line.startswith("psi.a=1,0.1467626")


def test_specfun_needs_a_selection(capsys):
    code, _, err = run(capsys, ["specfun"])
    assert code == 2
    assert "pick at least one" in err


def test_specfun_psi_requires_abscissa(capsys):
    code, _, _ = run(capsys, ["specfun", "--psi"])
    assert code == 2


def test_specfun_decay_constant_weak_regime_not_computable(capsys):
    code, _, err = run(capsys, ["specfun", "--decay-constant", "--alpha", "0.5"])
    assert code == 3
    assert "numerical failure" in err


def test_verify_rejects_unknown_preset(capsys):
    code, _, _ = run(capsys, ["verify", "--preset", "exotic"])
    assert code == 2


def test_estimate_extinction_writes_records(tmp_path, capsys):
    code, out, _ = run(capsys, [
        "estimate", "--experiment", "extinction", "--n", "200",
        "--seed", "5", "--output-dir", str(tmp_path), "--threads", "1",
    ])
    assert code == 0
    recs = read_results_csv(str(tmp_path / "results.csv"))
    names = [r.quantity for r in recs]
    assert "extinction.ClosedForm" in names
    assert "extinction.RaoBlackwell" in names
    assert "extinction.Pathwise" in names
    closed = next(r for r in recs if r.quantity == "extinction.ClosedForm")
    assert closed.value == pytest.approx(0.25)
    assert closed.theoretical == pytest.approx(0.25)
    assert all(r.seed == 5 for r in recs)
    assert (tmp_path / "results.jsonl").exists()
    assert out.splitlines()[0].startswith("quantity,value")


def test_environment_seed_applies_and_flag_wins(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BDRE_LAB_SEED", "777")
    code, _, _ = run(capsys, [
        "estimate", "--experiment", "extinction", "--n", "100",
        "--output-dir", str(tmp_path / "env"), "--threads", "1",
    ])
    assert code == 0
    recs = read_results_csv(str(tmp_path / "env" / "results.csv"))
    assert all(r.seed == 777 for r in recs)

    code, _, _ = run(capsys, [
        "estimate", "--experiment", "extinction", "--n", "100", "--seed", "42",
        "--output-dir", str(tmp_path / "flag"), "--threads", "1",
    ])
    assert code == 0
    recs = read_results_csv(str(tmp_path / "flag" / "results.csv"))
    assert all(r.seed == 42 for r in recs)


def test_simulate_writes_deterministic_paths(tmp_path, capsys):
    argv = [
        "simulate", "--kind", "bdre", "--n-paths", "3", "--dt", "0.05",
        "--horizon", "1", "--seed", "9", "--output-dir", str(tmp_path),
    ]
    code, _, _ = run(capsys, argv)
    assert code == 0
    first = (tmp_path / "paths.csv").read_bytes()
    lines = first.decode().splitlines()
    assert lines[0] == "path,t,z,s,model"
    assert len(lines) == 1 + 3 * 21  # header + three paths on a 21-point grid

    code, _, _ = run(capsys, argv)
    assert code == 0
    assert (tmp_path / "paths.csv").read_bytes() == first


def test_simulate_rejects_bad_path_count(capsys):
    code, _, _ = run(capsys, ["simulate", "--n-paths", "0"])
    assert code == 2


def test_rates_emits_curve_and_plot_script(tmp_path, capsys):
    cfg_path = tmp_path / "rates.cfg"
    write_config(
        replace(ExperimentConfig(), t_grid=(2.0, 3.0, 4.0, 5.0, 6.0), n=20_000),
        str(cfg_path),
    )
    code, out, _ = run(capsys, [
        "rates", "--config", str(cfg_path), "--seed", "31",
        "--output-dir", str(tmp_path), "--threads", "1",
    ])
    assert code == 0
    assert (tmp_path / "survival_curve.dat").exists()
    assert (tmp_path / "plot_survival.gp").exists()
    recs = read_results_csv(str(tmp_path / "results.csv"))
    rate = next(r for r in recs if r.quantity == "decay.exponential_rate")
    # finite-horizon fit near the boundary case: loose sanity band only
    assert 0.3 < rate.value < 0.9


def test_bridge_writes_record(tmp_path, capsys):
    code, _, _ = run(capsys, [
        "bridge", "--n-scale", "50", "--n-reps", "400", "--seed", "3",
        "--output-dir", str(tmp_path),
    ])
    assert code == 0
    recs = read_results_csv(str(tmp_path / "results.csv"))
    assert recs[0].quantity == "bridge.extinction_nscale=50"
    assert 0.0 < recs[0].value < 1.0
    assert recs[0].theoretical == pytest.approx(0.25)


def test_estimate_rates_experiment_is_redirected(tmp_path, capsys):
    cfg_path = tmp_path / "r.cfg"
    write_config(replace(ExperimentConfig(), experiment=Experiment.RATES), str(cfg_path))
    code, _, err = run(capsys, ["estimate", "--config", str(cfg_path)])
    assert code == 2
    assert "rates subcommand" in err
