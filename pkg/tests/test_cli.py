import io
import json
import subprocess
import sys

import pytest

from hardycert import cli
from hardycert.errors import ConfigError

EXP_PAIR = {"w1": {"kind": "exp"}, "w2": {"kind": "exp"}, "q": 2.0}
BAD_PAIR = {"w1": {"kind": "exp"}, "w2": {"kind": "monomial", "params": {"power": 2, "center": 0.0}},
            "q": 2.0}
P_LAPLACE_PROFILE = {"g": {"kind": "power", "gamma": -3.0, "beta": 3.0, "alpha": -1.0},
                     "theta": 2.0, "q": 2.0, "dimension": 7}


def _report(path):
    return json.loads((path / "report.json").read_text())


def test_resolve_fills_defaults():
    cfg = cli.resolve_config({"command": "certify-p", "pair": EXP_PAIR})
    assert cfg["scan"]["n_points"] == 200
    assert cfg["counterexample"]["budget"] == 12
    assert cfg["seed"] == 0


@pytest.mark.parametrize("raw", [
    {"command": "certify-p", "pair": EXP_PAIR, "colour": "red"},
    {"command": "certify-p", "pair": EXP_PAIR, "scan": {"n_point": 5}},
    {"command": "certify-p"},
    {"command": "integrate", "pair": EXP_PAIR},
    {"command": "certify-p", "pair": {"w1": {"kind": "lorentz"}, "w2": {"kind": "exp"}}},
    {"command": "estimate", "problem": "spectral", "pair": EXP_PAIR},
    {"command": "simulate", "params": {"m": 2.0 / 3.0, "p": 2.0}},
    {"command": "sweep", "base": {"command": "certify-p", "pair": EXP_PAIR},
     "parameter": "pair.r", "values": [1]},
    {"command": "sweep", "base": {"command": "certify-p", "pair": EXP_PAIR},
     "parameter": "pair.q", "values": []},
])
def test_resolve_rejects(raw):
    with pytest.raises(ConfigError):
        cli.resolve_config(raw)


def test_command_mismatch():
    with pytest.raises(ConfigError):
        cli.resolve_config({"command": "certify-hp", "family": {"kind": "exponential"}},
                           "certify-p")


def test_certify_p_holds(tmp_path):
    code = cli.main(["certify-p", _write(tmp_path, {"pair": EXP_PAIR}), "-o", str(tmp_path / "o")])
    assert code == cli.EXIT_OK
    rep = _report(tmp_path / "o")
    assert rep["status"] == "holds" and rep["schema"] == 1
    cert = rep["result"]["certification"]
    assert cert["lower_bound"] <= 1.0 <= cert["upper_bound"]
    for name in ("report.txt", "timing.json", "weights.csv", "weights.svg"):
        assert (tmp_path / "o" / name).exists()


def test_certify_p_counterexample(tmp_path):
    code = cli.main(["certify-p", _write(tmp_path, {"pair": BAD_PAIR}), "-o", str(tmp_path / "o")])
    assert code == cli.EXIT_DOES_NOT_HOLD
    rep = _report(tmp_path / "o")
    assert rep["status"] == "does_not_hold"
    assert rep["result"]["counterexample"]["found"]
    assert (tmp_path / "o" / "counterexample.csv").exists()


def test_reports_are_deterministic(tmp_path):
    cfg = _write(tmp_path, {"pair": EXP_PAIR})
    cli.main(["certify-p", cfg, "-o", str(tmp_path / "a")])
    cli.main(["certify-p", cfg, "-o", str(tmp_path / "b")])
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_derive_h_p_laplace_profile(tmp_path):
    code = cli.run({"command": "derive-h", "profile": P_LAPLACE_PROFILE}, tmp_path)
    assert code == cli.EXIT_OK
    der = _report(tmp_path)["result"]["derivation"]
    assert der["c_h"] == pytest.approx(4.0, rel=1e-12)


def test_certify_hp(tmp_path):
    fam = {"kind": "power", "params": {"gamma": 0, "beta": 2, "alpha": -2}, "dimension": 3}
    assert cli.run({"command": "certify-hp", "family": fam}, tmp_path) == cli.EXIT_OK
    assert (tmp_path / "family.svg").exists()


def test_runtime_error_is_structured(tmp_path):
    # g = (1 + r^2)^(-3/2) in N = 7: sign(alpha beta + gamma + 2) != sign(gamma + 2)
    prof = {"g": {"kind": "power", "gamma": 0.0, "beta": 2.0, "alpha": -1.5},
            "theta": 2.0, "q": 2.0, "dimension": 7}
    code = cli.run({"command": "derive-h", "profile": prof}, tmp_path)
    rep = _report(tmp_path)
    assert code == cli.EXIT_FAIL
    assert rep["status"] == "error"
    assert rep["result"]["error"]["type"] == "ConditionsViolated"


def test_estimate_poincare(tmp_path):
    code = cli.run({"command": "estimate", "problem": "poincare", "pair": EXP_PAIR,
                    "n_nodes": 128}, tmp_path)
    assert code == cli.EXIT_OK
    est = _report(tmp_path)["result"]["estimate"]
    assert 0.0858 <= est["value"] <= 16.0
    assert (tmp_path / "maximizer.csv").exists()


def test_simulate(tmp_path):
    code = cli.run({"command": "simulate", "params": {"m": 0.875, "p": 1.8, "N": 3},
                    "tau_end": 2.0, "n_cells": 100}, tmp_path)
    assert code == cli.EXIT_OK
    trace = _report(tmp_path)["result"]["trace"]
    assert trace["mu"] > 0
    assert (tmp_path / "trace.csv").exists()


def test_sweep_independent_of_thread_cap(tmp_path, monkeypatch):
    sweep = {"command": "sweep", "base": {"command": "certify-p", "pair": EXP_PAIR},
             "parameter": "pair.q", "values": [1.5, 3.0]}
    monkeypatch.setenv("HARDY_CERT_THREADS", "1")
    assert cli.run(sweep, tmp_path / "one") == cli.EXIT_OK
    monkeypatch.setenv("HARDY_CERT_THREADS", "4")
    assert cli.run(sweep, tmp_path / "many") == cli.EXIT_OK
    for i in range(2):
        a = (tmp_path / "one" / f"run_{i:03d}" / "report.json").read_bytes()
        b = (tmp_path / "many" / f"run_{i:03d}" / "report.json").read_bytes()
        assert a == b
    runs = _report(tmp_path / "one")["result"]["runs"]
    assert [r["status"] for r in runs] == ["holds", "holds"]


def test_malformed_json_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["certify-p", str(bad), "-o", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "ConfigError"


def test_stdin_config(tmp_path, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps({"pair": EXP_PAIR})))
    assert cli.main(["certify-p", "-", "-o", str(tmp_path)]) == cli.EXIT_OK


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, {"profile": P_LAPLACE_PROFILE})
    proc = subprocess.run([sys.executable, "-m", "hardycert", "derive-h", cfg, "-o",
                           str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def _write(tmp_path, obj):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(obj))
    return str(path)
