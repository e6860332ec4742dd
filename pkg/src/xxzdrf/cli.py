"""Command-line front end: ``xxz {solve|curves|velocity|exponents|verify}``.

Numbers go out as decimal strings with 17 significant digits, so a rerun with
the same configuration writes byte-identical files.  Exit codes: 0 ok,
1 failed verification, 2 bad configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import asymptotics as lab
from .excitations import ExcitationConfig, ExcitationError, edge_exponents, excitation_energy, excitation_momentum
from .fredholm import NumericalError
from .momentum import MomentumDomainError, MomentumMap
from .observables import ConfigError, ModelParams, identity_residuals, solve_core
from .thresholds import CSV_COLUMNS, default_grid, family_deltas, figure1_dataset, figure_kinds, threshold_curve
from .velocity import HypothesisError, build_atlas, verify_hypotheses

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("solve", "curves", "velocity", "exponents", "verify")
VERIFY_SUITES = ("identities", "beta1d", "lemma", "model", "hypotheses", "all")
DEFAULT_OUT = {"solve": "observables.json", "curves": "curves.csv", "velocity": "velocity.csv",
               "exponents": "exponents.csv", "verify": "report.json"}
# parameter sets used by the identity and hypothesis suites when none are given
REFERENCE_POINTS = ((0.57, 0.21), (-0.60, 0.30))
IDENTITY_TOL = 1e-8

# keys accepted in a JSON config file, with their types
CONFIG_KEYS = {"delta": float, "zeta": float, "J": float, "h": float, "density": float, "q": float,
               "N": int, "strings": str, "kgrid": int, "out": str, "seed": int, "workers": int,
               "suite": str, "excitation": str}


# ---- serialization ------------------------------------------------------------------
def fmt(x) -> str:
    """17 significant digits; repr-stable across platforms."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _stringify(obj):
    if isinstance(obj, dict):
        return {str(k): _stringify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_stringify(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    return obj


def dumps_json(doc) -> str:
    return json.dumps(_stringify(doc), sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def dumps_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in (row[c] for c in columns)])
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---- configuration --------------------------------------------------------------------
def parse_strings(spec) -> tuple:
    """'2:0,3:1' -> ((2, 0), (3, 1))."""
    if spec in (None, ""):
        return ()
    out = []
    for item in str(spec).split(","):
        try:
            r, par = item.split(":")
            out.append((int(r), int(par)))
        except ValueError as exc:
            raise ConfigError(f"bad --strings entry {item!r}, expected r:parity") from exc
    return tuple(out)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    out = {}
    for key, val in doc.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc
    return out


def merge_config(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("J", 1.0)
    cfg.setdefault("N", 128)
    cfg.setdefault("seed", 0)
    cfg.setdefault("workers", os.cpu_count() or 1)
    cfg.setdefault("kgrid", 401)
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if cfg["kgrid"] < 3:
        raise ConfigError("kgrid must be >= 3")
    return cfg


def has_model(cfg) -> bool:
    return any(k in cfg for k in ("delta", "zeta", "h", "density", "q"))


def model_params(cfg) -> ModelParams:
    if ("delta" in cfg) == ("zeta" in cfg):
        raise ConfigError("give exactly one of --delta and --zeta")
    kw = dict(J=cfg["J"], h=cfg.get("h"), density=cfg.get("density"), q=cfg.get("q"),
              N=cfg["N"], strings=parse_strings(cfg.get("strings")))
    params = (ModelParams.from_delta(cfg["delta"], **kw) if "delta" in cfg
              else ModelParams(zeta=cfg["zeta"], **kw))
    params.validate()
    return params


# ---- commands -----------------------------------------------------------------------
def _grid_doc(obs, values):
    return {"nodes": obs.grid.nodes, "values": values}


def cmd_solve(cfg) -> int:
    obs = solve_core(model_params(cfg))
    p = obs.params
    doc = {
        "params": {"zeta": p.zeta, "delta": p.delta, "J": p.J, "N": p.N,
                   "strings": [list(s) for s in p.strings]},
        "q": obs.q, "h": obs.h, "p_F": obs.p_F, "v_F": obs.v_F,
        "grids": {"weights": obs.grid.weights, "Z": _grid_doc(obs, obs.Z),
                  "eps1": _grid_doc(obs, obs.eps), "eps1_d1": _grid_doc(obs, obs.eps_d1),
                  "eps1_d2": _grid_doc(obs, obs.eps_d2), "p1": _grid_doc(obs, obs.p1(obs.grid.nodes)),
                  "p1_d1": _grid_doc(obs, obs.p1_d1), "g": _grid_doc(obs, obs.g)},
    }
    _write(cfg.get("out", DEFAULT_OUT["solve"]), dumps_json(doc))
    return EXIT_OK


def _setup(cfg):
    mm = MomentumMap(solve_core(model_params(cfg)))
    return mm, build_atlas(mm)


def cmd_curves(cfg) -> int:
    mm, atlas = _setup(cfg)
    rows, _ = figure1_dataset(mm, atlas, cfg["kgrid"])
    _write(cfg.get("out", DEFAULT_OUT["curves"]), dumps_csv(CSV_COLUMNS, rows))
    return EXIT_OK


def velocity_rows(mm: MomentumMap, n: int) -> list:
    """(k, v1) over the hole and particle intervals, both ends included."""
    ks = np.linspace(mm.k_min, mm.k_max, n)
    return [{"k": k, "v1": v} for k, v in zip(ks, mm.v1(ks))]


def cmd_velocity(cfg) -> int:
    mm = MomentumMap(solve_core(model_params(cfg)))
    _write(cfg.get("out", DEFAULT_OUT["velocity"]), dumps_csv(("k", "v1"), velocity_rows(mm, cfg["kgrid"])))
    return EXIT_OK


EXPONENT_COLUMNS = ("kind", "param", "k", "omega", "delta_plus", "delta_minus",
                    "delta_plus_family", "delta_minus_family", "exponent", "flags")


def cmd_exponents(cfg) -> int:
    """Either the edge exponents of one excitation (--excitation JSON) or, for
    every two-excitation family, the generic and the family-specific values."""
    mm, atlas = _setup(cfg)
    if cfg.get("excitation"):
        text = cfg["excitation"]
        if os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        try:
            exc = ExcitationConfig.from_json(text)
        except (json.JSONDecodeError, TypeError, ValueError) as err:
            raise ConfigError(f"bad excitation: {err}") from err
        dp, dm = edge_exponents(exc, mm)
        doc = {"momentum": excitation_momentum(exc, mm), "energy": excitation_energy(exc, mm),
               "delta_plus": dp, "delta_minus": dm}
        out = cfg.get("out", "exponents.json")
        _write(out, dumps_json(doc))
        return EXIT_OK
    n = max(3, min(cfg["kgrid"], 51))
    rows = []
    for kind in figure_kinds(mm):
        for smp in threshold_curve(kind, default_grid(kind, mm, atlas, n), mm, atlas):
            fp, fm = family_deltas(kind.label, smp.param, mm, atlas)
            rows.append({"kind": kind.label, "param": smp.param, "k": smp.P0, "omega": smp.E0,
                         "delta_plus": smp.delta_plus, "delta_minus": smp.delta_minus,
                         "delta_plus_family": fp, "delta_minus_family": fm,
                         "exponent": smp.exponent, "flags": ";".join(smp.flags)})
    _write(cfg.get("out", DEFAULT_OUT["exponents"]), dumps_csv(EXPONENT_COLUMNS, rows))
    return EXIT_OK


# ---- verification ----------------------------------------------------------------------
def _reference_params(cfg) -> list:
    if has_model(cfg):
        return [model_params(cfg)]
    return [ModelParams.from_delta(d, density=D, N=cfg["N"]) for d, D in REFERENCE_POINTS]


def _label(p: ModelParams) -> str:
    field = next(f"{k}={fmt(v)}" for k, v in (("h", p.h), ("density", p.density), ("q", p.q))
                 if v is not None)
    return f"delta={fmt(p.delta)},{field}"


def charge_identity_checks(cfg) -> list:
    out = []
    for p in _reference_params(cfg):
        res = identity_residuals(solve_core(p))
        for name, val in res.items():
            out.append({"name": f"{name}[{_label(p)}]", "predicted": 0.0, "fitted": val,
                        "tolerance": IDENTITY_TOL, "pass": val < IDENTITY_TOL})
    return out


def hypothesis_checks(cfg) -> list:
    out = []
    for p in _reference_params(cfg):
        rep = verify_hypotheses(build_atlas(MomentumMap(solve_core(p))))
        for b in rep["bullets"]:
            out.append({"name": f"{b['name']}[{_label(p)}]", "predicted": "margin > 0",
                        "fitted": b["margin"], "tolerance": 0.0, "pass": b["pass"]})
    return out


def run_verify(cfg) -> dict:
    suite = cfg.get("suite", "all")
    if suite not in VERIFY_SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(VERIFY_SUITES)}")
    chosen = ("identities", "beta1d", "lemma", "model", "hypotheses") if suite == "all" else (suite,)
    checks = []
    for name in chosen:
        if name == "identities":
            part = charge_identity_checks(cfg) + lab.identity_checks(cfg["seed"])
        elif name == "hypotheses":
            part = hypothesis_checks(cfg)
        elif name == "model":
            part = lab.model_checks(cfg["seed"], cfg["workers"])
        else:
            part = lab.run_suite(name, cfg["seed"])
        checks.extend(dict(c, suite=name) for c in part)
    return {"suite": suite, "seed": cfg["seed"], "pass": all(bool(c["pass"]) for c in checks),
            "checks": checks}


def cmd_verify(cfg) -> int:
    report = run_verify(cfg)
    _write(cfg.get("out", DEFAULT_OUT["verify"]), dumps_json(report))
    for c in report["checks"]:
        if not c["pass"]:
            print(f"FAILED {c['name']}: fitted {fmt(c['fitted']) if not isinstance(c['fitted'], str) else c['fitted']}"
                  f" vs {c['predicted']}", file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_FAIL


HANDLERS = {"solve": cmd_solve, "curves": cmd_curves, "velocity": cmd_velocity,
            "exponents": cmd_exponents, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xxz", description="Dressed quantities, threshold curves and "
                                 "edge exponents of the massless XXZ chain.")
    ap.add_argument("command", choices=COMMANDS)
    g = ap.add_mutually_exclusive_group()
    g.add_argument("--delta", type=float, help="anisotropy, |delta| < 1")
    g.add_argument("--zeta", type=float, help="angle with delta = cos(zeta)")
    ap.add_argument("--J", type=float, help="exchange coupling (default 1)")
    f = ap.add_mutually_exclusive_group()
    f.add_argument("--h", type=float, help="magnetic field")
    f.add_argument("--density", type=float, help="magnon density D in (0, 1/2)")
    f.add_argument("--q", type=float, help="Fermi rapidity")
    ap.add_argument("--N", type=int, help="quadrature order (default 128)")
    ap.add_argument("--strings", help="enabled strings as r:parity pairs, e.g. 2:0")
    ap.add_argument("--kgrid", type=int, help="points per curve or velocity grid (default 401)")
    ap.add_argument("--out", help="output path, '-' for stdout")
    ap.add_argument("--seed", type=int, help="seed for the Monte-Carlo checks (default 0)")
    ap.add_argument("--workers", type=int, help="worker processes (default: all cores)")
    ap.add_argument("--suite", help="verify suite: " + ", ".join(VERIFY_SUITES))
    ap.add_argument("--excitation", help="exponents: excitation as JSON text or a JSON file")
    ap.add_argument("--config", help="JSON config file; flags override its entries")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = merge_config(args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, ExcitationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, MomentumDomainError, HypothesisError, lab.FitError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
