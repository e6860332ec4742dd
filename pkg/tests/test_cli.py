import csv
import functools
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import xxzdrf.asymptotics as lab
from xxzdrf import cli
from xxzdrf.fredholm import NumericalError


def run(*args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_solve_round_trip(tmp_path):
    out = tmp_path / "obs.json"
    assert run("solve", "--delta", 0.57, "--density", 0.21, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert float(doc["q"]) > 0
    assert abs(float(doc["p_F"]) / math.pi - 0.21) < 1e-8
    assert all(isinstance(v, str) for v in doc["grids"]["Z"]["values"])
    assert len(doc["grids"]["Z"]["nodes"]) == 128


def test_solve_free_fermions(tmp_path):
    out = tmp_path / "ff.json"
    assert run("solve", "--delta", 0, "--h", 2.0, "--J", 1, "--out", out) == 0
    z = np.array([float(v) for v in json.loads(out.read_text())["grids"]["Z"]["values"]])
    assert np.abs(z - 1).max() < 1e-10


@pytest.mark.parametrize("args", [
    ("solve", "--delta", 0.57, "--density", 0.7),
    ("solve", "--density", 0.2),
    ("solve", "--delta", 0.5, "--density", 0.2, "--h", 1.0),
    ("solve", "--delta", 1.5, "--density", 0.2),
    ("curves", "--delta", 0.57, "--density", 0.21, "--strings", "two"),
    ("verify", "--suite", "nonsense"),
    ("frobnicate",),
])
def test_config_errors_exit_2(args, tmp_path, capsys):
    assert run(*args, "--out", tmp_path / "x") == 2
    assert capsys.readouterr().err


def test_numerical_error_exit_3(monkeypatch, tmp_path, capsys):
    def boom(params):
        raise NumericalError("singular system")
    monkeypatch.setattr(cli, "solve_core", boom)
    assert run("solve", "--delta", 0.57, "--density", 0.21, "--out", tmp_path / "x") == 3
    assert "singular system" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"delta": 0.57, "density": 0.30, "N": 64}))
    out = tmp_path / "o.json"
    assert run("solve", "--config", cfg, "--density", 0.21, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert abs(float(doc["p_F"]) / math.pi - 0.21) < 1e-8 and doc["params"]["N"] == 64
    cfg.write_text(json.dumps({"delta": 0.57, "colour": "blue"}))
    assert run("solve", "--config", cfg, "--out", out) == 2


def test_curves_csv(tmp_path):
    out = tmp_path / "c.csv"
    assert run("curves", "--delta", 0.57, "--density", 0.21, "--kgrid", 21, "--out", out) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = read_csv(out)
    assert list(rows[0]) == ["kind", "param", "k", "omega", "delta_plus", "delta_minus", "exponent",
                             "amp_universal", "w_plus", "w_minus", "flags"]
    kinds = {r["kind"] for r in rows}
    base = {k for k in kinds if not k.endswith("_mirror")}
    assert len(base) >= 9 and all(k + "_mirror" in kinds for k in base)
    out2 = tmp_path / "c2.csv"
    run("curves", "--delta", 0.57, "--density", 0.21, "--kgrid", 21, "--out", out2)
    assert out2.read_bytes() == raw


def test_velocity_csv_two_interior_extrema(tmp_path):
    out = tmp_path / "v.csv"
    assert run("velocity", "--delta", -0.60, "--density", 0.30, "--kgrid", 2001, "--out", out) == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["k", "v1"]
    k = np.array([float(r["k"]) for r in rows])
    v = np.array([float(r["v1"]) for r in rows])
    pF = 0.30 * math.pi
    assert k[0] == pytest.approx(-pF, abs=1e-8)
    particle = k > pF
    dv = np.diff(v[particle])
    assert int(np.sum(np.sign(dv[1:]) != np.sign(dv[:-1]))) == 2


def test_exponents_table_and_single_excitation(tmp_path, capsys):
    out = tmp_path / "e.csv"
    assert run("exponents", "--delta", 0.57, "--density", 0.21, "--kgrid", 7, "--out", out) == 0
    for r in read_csv(out):
        assert abs(float(r["delta_plus"]) - float(r["delta_plus_family"])) < 1e-10
        assert abs(float(r["delta_minus"]) - float(r["delta_minus_family"])) < 1e-10
    exc = json.dumps({"ell_plus": 1, "holes": ["0.3"]})
    assert run("exponents", "--delta", 0.57, "--density", 0.21, "--excitation", exc, "--out", "-") == 0
    doc = json.loads(capsys.readouterr().out)
    assert float(doc["delta_plus"]) >= 0
    bad = json.dumps({"holes": ["0.3"]})
    assert run("exponents", "--delta", 0.57, "--density", 0.21, "--excitation", bad, "--out", "-") == 2


def test_verify_identities(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--suite", "identities", "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] is True
    assert {"name", "predicted", "fitted", "tolerance", "pass"} <= set(rep["checks"][0])
    names = " ".join(c["name"] for c in rep["checks"])
    assert "charge_from_phase" in names and "gaudin_mehta(n=3)" in names


def test_verify_failure_exit_1(monkeypatch, tmp_path):
    monkeypatch.setattr(lab, "run_suite", lambda name, seed=0, workers=1: [
        {"name": "forced", "predicted": 1.0, "fitted": 2.0, "tolerance": 0.1, "pass": False}])
    assert run("verify", "--suite", "lemma", "--out", tmp_path / "r.json") == 1


def test_verify_model_report_is_seed_deterministic(monkeypatch, tmp_path):
    # a cheap version of the model suite: one Monte-Carlo spec, few samples
    monkeypatch.setattr(lab, "MODEL_SPECS", {"triple_mc": lab.MODEL_SPECS["triple_mc"]})
    monkeypatch.setattr(lab, "model_checks", functools.partial(lab.model_checks, n_samples=256, per_decade=3))
    a, b, c = (tmp_path / n for n in ("a.json", "b.json", "c.json"))
    run("verify", "--suite", "model", "--seed", 42, "--out", a)
    run("verify", "--suite", "model", "--seed", 42, "--workers", 2, "--out", b)
    run("verify", "--suite", "model", "--seed", 43, "--out", c)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    rep = json.loads(a.read_text())
    mc = [x for x in rep["checks"] if x["name"].startswith("model_exponent")][0]
    assert len(mc["stderr"]) > 0 and mc["method"] == "monte-carlo"


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "xxzdrf.cli", "solve", "--delta", "0.3", "--h", "1.0",
                          "--out", str(tmp_path / "o.json")], capture_output=True)
    assert res.returncode == 0


def test_verify_all_within_budget(tmp_path):
    out = tmp_path / "all.json"
    t0 = time.perf_counter()
    code = run("verify", "--suite", "all", "--out", out)
    elapsed = time.perf_counter() - t0
    rep = json.loads(out.read_text())
    failed = [c["name"] for c in rep["checks"] if not c["pass"]]
    assert code == 0, failed
    assert {c["suite"] for c in rep["checks"]} == {"identities", "beta1d", "lemma", "model", "hypotheses"}
    assert elapsed < 600
