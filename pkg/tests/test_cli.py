import hashlib
import json

import pytest

from consensus_clock.checks import format_table, run_validation
from consensus_clock.cli import (EXIT_CHECK_FAILED, EXIT_OK, EXIT_PRECONDITION,
                                 EXIT_USAGE, RunConfig, _build_parser,
                                 _config_from_ns, main)


def _hash(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_params_subcommand(capsys):
    assert main(["params", "--p", "0.7", "--delay", "unit"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["p_c"] == pytest.approx(0.5, abs=1e-6)
    assert doc["z_star"] == pytest.approx(0.428571, abs=1e-6)
    assert doc["gamma"] == pytest.approx(0.428571, abs=1e-6)


def test_bitcoin_analytic_subcommand(capsys):
    assert main(["bitcoin-analytic", "--p", "0.72", "--q", "0.9",
                 "--rate", "0.1"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert 54.0 <= doc["mean_ttc"] <= 66.0
    assert doc["s_star_star"] < doc["s_star"]


def test_bitcoin_analytic_grid_csv(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    assert main(["bitcoin-analytic", "--p", "0.72", "--q", "0.9",
                 "--grid-csv", str(out)]) == EXIT_OK
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert lines[0] == "s,tau_lt"
    assert len(lines) == 201
    s0, v0 = map(float, lines[1].split(","))
    assert 0.0 < v0 < 1.0 and s0 > 0.0


def test_precondition_exit_code(capsys):
    code = main(["general-sim", "--p", "0.6", "--delay", "det:2",
                 "--samples", "10"])
    assert code == EXIT_PRECONDITION
    err = capsys.readouterr().err
    assert "0.618" in err


def test_json_errors(capsys):
    code = main(["--json-errors", "general-sim", "--p", "0.6", "--delay",
                 "det:2", "--samples", "10"])
    assert code == EXIT_PRECONDITION
    doc = json.loads(capsys.readouterr().err)
    assert doc["error"] == "precondition"
    assert doc["p_critical"] == pytest.approx(0.618034, abs=1e-5)


def test_unknown_key_rejected(capsys):
    # q is a stylized-model parameter; general-sim must name the stray key
    code = main(["general-sim", "--p", "0.7", "--delay", "unit", "--q", "0.9"])
    assert code == EXIT_USAGE
    assert "--q" in capsys.readouterr().err


def test_security_threshold_exit(capsys):
    code = main(["bitcoin-analytic", "--p", "0.5", "--q", "0.9"])
    assert code == EXIT_PRECONDITION


def test_bitcoin_sim_reproducible_outputs(tmp_path, capsys):
    argv = ["bitcoin-sim", "--p", "0.84", "--q", "0.9", "--samples", "300",
            "--master-seed", "5", "--jobs", "2"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(a)]) == EXIT_OK
    assert main(argv + ["--out-dir", str(b)]) == EXIT_OK
    capsys.readouterr()
    for name in ("bitcoin_samples.csv", "bitcoin_summary.json", "bitcoin_tail.csv"):
        assert _hash(a / name) == _hash(b / name), name
    doc = json.loads((a / "bitcoin_summary.json").read_text())
    assert doc["master_seed"] == 5 and doc["n"] == 300


def test_env_seed_override(tmp_path, capsys, monkeypatch):
    argv = ["bitcoin-sim", "--p", "0.84", "--q", "0.9", "--samples", "50",
            "--master-seed", "5"]
    a, b = tmp_path / "a", tmp_path / "b"
    monkeypatch.setenv("CONSENSUS_CLOCK_SEED", "99")
    assert main(argv + ["--out-dir", str(a)]) == EXIT_OK
    monkeypatch.delenv("CONSENSUS_CLOCK_SEED")
    assert main(argv + ["--master-seed", "99", "--out-dir", str(b)]) == EXIT_OK
    capsys.readouterr()
    assert _hash(a / "bitcoin_samples.csv") == _hash(b / "bitcoin_samples.csv")


def test_general_sim_outputs(tmp_path, capsys):
    assert main(["general-sim", "--p", "0.7", "--delay", "unit", "--samples",
                 "400", "--master-seed", "8", "--out-dir", str(tmp_path),
                 "--emit", "csv,json,cycles"]) == EXIT_OK
    capsys.readouterr()
    doc = json.loads((tmp_path / "general_summary.json").read_text())
    assert sorted(doc) == ["delay", "gamma_analytic", "master_seed", "n", "p",
                           "slope_ci", "slope_fitted"]
    lines = (tmp_path / "general_t_samples.csv").read_text().splitlines()
    assert lines[0] == "replica,t_cycles" and len(lines) == 401
    assert (tmp_path / "general_cycles.csv").exists()


def test_config_roundtrip():
    parser = _build_parser()
    ns = parser.parse_args(["bitcoin-sim", "--p", "0.8", "--q", "0.9",
                            "--samples", "10"])
    cfg = _config_from_ns(ns)
    clone = RunConfig(subcommand=cfg.subcommand, options=dict(cfg.options))
    assert cfg.to_json() == clone.to_json()
    assert json.loads(cfg.to_json())["subcommand"] == "bitcoin-sim"


def test_validate_negative_control():
    # corrupting the tilt must break exactly the gamma-slope check
    rows = run_validation(quick=True, only={"gamma-slope"}, _z_star_scale=1.6)
    assert len(rows) == 1 and rows[0].name == "gamma-slope"
    assert not rows[0].passed
    table = format_table(rows)
    assert "FAIL" in table


def test_validate_quick_gamma_slope_passes():
    rows = run_validation(quick=True, only={"gamma-slope", "p_c(unit)"})
    assert all(r.passed for r in rows)


def test_validate_identity_checks():
    rows = run_validation(only={"p_c(unit)", "p_c(det:2)", "z*(0.8,det:2)",
                                "gamma(0.8,det:2)", "determinism"})
    assert all(r.passed for r in rows)
    assert len(rows) == 5


def test_validate_quick_full_battery(capsys):
    assert main(["validate", "--quick", "--jobs", "8"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert "gamma-slope" in out and "busy-oracle" in out
