"""Command-line front end: strict JSON configs in, report.json / report.txt / CSV / SVG out.

Exit codes: 0 success, 2 the inequality does not hold, 1 tool failure, 3 bad config.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import _svg
from . import criteria, fastdiff, hardy_construct as hc, optimal_search as osr, weights as wt
from .errors import ConfigError, HardyCertError, WitnessNotFound

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_DOES_NOT_HOLD, EXIT_CONFIG = 0, 1, 2, 3
COMMANDS = ("certify-p", "certify-hp", "derive-h", "estimate", "sweep", "simulate")

# --------------------------------------------------------------------------- #
# schema: allowed keys and defaults per command (None marks a required key)

_SCAN_DEFAULTS = {"n_points": 200, "horizon_factor": 1e6, "max_extensions": 3, "rel_tol": 1e-8,
                  "quad_rel_tol": 1e-10}
_SCHEMAS = {
    "certify-p": {"pair": None, "scan": _SCAN_DEFAULTS,
                  "counterexample": {"budget": 12, "threshold": 1e3}},
    "certify-hp": {"family": None, "q": 2.0, "scan": _SCAN_DEFAULTS},
    "derive-h": {"profile": None, "check_conditions": True, "plot_range": [1e-3, 1e3]},
    "estimate": {"problem": "poincare", "pair": None, "family": None, "w1": None, "w2": None,
                 "q": None, "n_nodes": 256, "span": None, "inner": None, "restarts": 4,
                 "max_iter": 500},
    "sweep": {"base": None, "parameter": None, "values": None},
    "simulate": {"params": None, "initial": {"kind": "mixture", "D0": 0.8, "D1": 1.25,
                                             "weight": 0.5},
                 "tau_end": 10.0, "n_cells": 400, "dtau": 0.02, "r_max": None,
                 "scheme": "well_balanced", "eps_reg": fastdiff.EPS_REG,
                 "check_regularization": False},
}
_COMMON = {"command": None, "seed": 0, "output": None}
_OPTIONAL_NONE = {("estimate", k) for k in ("pair", "family", "w1", "w2", "q", "span", "inner")}
_OPTIONAL_NONE |= {("simulate", "r_max")}


def _merge_strict(defaults: dict, given: dict, where: str) -> dict:
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(unknown)}")
    out = {}
    for k, d in defaults.items():
        if k in given:
            v = given[k]
            if isinstance(d, dict) and d and isinstance(v, dict):
                v = _merge_strict(d, v, f"{where}.{k}")
            out[k] = v
        else:
            out[k] = copy.deepcopy(d)
    return out


def resolve_config(raw: dict, command: str | None = None) -> dict:
    """Validate keys, fill defaults and return the resolved configuration."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cmd = raw.get("command", command)
    if command is not None and cmd != command:
        raise ConfigError(f"config command {cmd!r} does not match {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    body = {k: v for k, v in raw.items() if k not in _COMMON}
    cfg = _merge_strict(_SCHEMAS[cmd], body, "config")
    for k, v in cfg.items():
        if v is None and (cmd, k) not in _OPTIONAL_NONE:
            raise ConfigError(f"missing required field {k!r} for {cmd}")
    cfg = {"command": cmd, "seed": int(raw.get("seed", 0)), **cfg}
    if cmd == "sweep":
        if not isinstance(cfg["values"], list) or not cfg["values"]:
            raise ConfigError("sweep.values must be a nonempty list")
        base = dict(cfg["base"])
        base.pop("output", None)
        cfg["base"] = resolve_config(base)
        if cfg["base"]["command"] == "sweep":
            raise ConfigError("nested sweeps are not supported")
        for v in cfg["values"]:
            resolve_config(_set_path(copy.deepcopy(cfg["base"]), cfg["parameter"], v))
    else:
        _build_objects(cfg)  # surfaces bad weight descriptors as ConfigError
    return cfg


# --------------------------------------------------------------------------- #
# object construction

def _pair(obj, q=None) -> wt.WeightPair:
    if not isinstance(obj, dict):
        raise ConfigError("pair must be an object with w1, w2 and q")
    unknown = set(obj) - {"w1", "w2", "q"}
    if unknown:
        raise ConfigError(f"unknown field(s) in pair: {', '.join(sorted(unknown))}")
    qq = float(obj.get("q", 2.0 if q is None else q))
    return wt.WeightPair(wt.line_weight_from_json(obj["w1"]), wt.line_weight_from_json(obj["w2"]),
                         qq)


def _profile(obj) -> hc.ThetaLaplaceProfile:
    unknown = set(obj) - {"g", "theta", "q", "dimension"}
    if unknown:
        raise ConfigError(f"unknown field(s) in profile: {', '.join(sorted(unknown))}")
    g = dict(obj["g"])
    kind = g.pop("kind", "power")
    if kind == "power":
        prof_g = hc.PowerTypeG(**{k: float(v) for k, v in g.items()})
    elif kind == "tabulated":
        prof_g = hc.TabulatedG(tuple(tuple(map(float, n)) for n in g["nodes"]))
    else:
        raise ConfigError(f"unknown profile kind {kind!r}")
    return hc.ThetaLaplaceProfile(prof_g, theta=float(obj.get("theta", 2.0)),
                                  q=float(obj.get("q", 2.0)),
                                  dimension=int(obj.get("dimension", 3)))


def _scan(obj) -> criteria.ScanSpec:
    from .quad import QuadratureSpec
    return criteria.ScanSpec(n_points=int(obj["n_points"]),
                             horizon_factor=float(obj["horizon_factor"]),
                             max_extensions=int(obj["max_extensions"]),
                             rel_tol=float(obj["rel_tol"]),
                             quad=QuadratureSpec(rel_tol=float(obj["quad_rel_tol"]),
                                                 max_subdivisions=20000))


def _build_objects(cfg: dict) -> dict:
    cmd = cfg["command"]
    try:
        if cmd == "certify-p":
            return {"pair": _pair(cfg["pair"]), "scan": _scan(cfg["scan"])}
        if cmd == "certify-hp":
            return {"family": wt.family_from_json(cfg["family"]), "scan": _scan(cfg["scan"])}
        if cmd == "derive-h":
            return {"profile": _profile(cfg["profile"])}
        if cmd == "estimate":
            prob = cfg["problem"]
            if prob == "poincare":
                if cfg["pair"] is None:
                    raise ConfigError("estimate/poincare needs 'pair'")
                return {"pair": _pair(cfg["pair"], cfg["q"])}
            if prob == "hardy":
                q = float(cfg["q"] or 2.0)
                if cfg["family"] is not None:
                    return {"pair": osr.family_measure_pair(wt.family_from_json(cfg["family"]), q)}
                if cfg["w1"] is None or cfg["w2"] is None:
                    raise ConfigError("estimate/hardy needs 'family' or both 'w1' and 'w2'")
                return {"pair": osr.radial_measure_pair(wt.family_from_json(cfg["w1"]),
                                                        wt.family_from_json(cfg["w2"]), q)}
            if prob == "muckenhoupt":
                if cfg["pair"] is None:
                    raise ConfigError("estimate/muckenhoupt needs 'pair'")
                return {"pair": _pair(cfg["pair"], cfg["q"])}
            raise ConfigError(f"unknown estimate problem {prob!r}")
        if cmd == "simulate":
            p = dict(cfg["params"])
            unknown = set(p) - {"m", "p", "N"}
            if unknown:
                raise ConfigError(f"unknown field(s) in params: {', '.join(sorted(unknown))}")
            params = fastdiff.DnleParams(float(p["m"]), float(p["p"]), int(p.get("N", 3)))
            return {"params": params,
                    "scheme": fastdiff.Scheme(cfg["scheme"], float(cfg["eps_reg"]))}
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, HardyCertError) as exc:
        raise ConfigError(f"invalid {cmd} configuration: {type(exc).__name__}: {exc}") from exc
    return {}


def _set_path(cfg: dict, path: str, value):
    node = cfg
    keys = path.split(".")
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"sweep parameter path {path!r} not found")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"sweep parameter path {path!r} not found")
    node[keys[-1]] = value
    return cfg


# --------------------------------------------------------------------------- #
# output helpers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _write_csv(path: Path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def _write_text(path: Path, text: str):
    path.write_text(text)


def _table(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in pairs) + "\n"


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


# --------------------------------------------------------------------------- #
# command implementations: each returns (status, result, text_rows, artifacts)
# where artifacts maps filename -> ("csv", rows) or ("svg", text)

def _weights_artifacts(w1, w2, center, span, name="weights"):
    s = np.linspace(center - span, center + span, 401)
    with np.errstate(all="ignore"):
        a, b = w1(s), w2(s)
    rows = [("s", "w1", "w2")] + [(repr(float(x)), repr(float(y)), repr(float(z)))
                                  for x, y, z in zip(s, a, b)]
    svg = _svg.line_plot([("w1", s, a), ("w2", s, b)], title="weights", xlabel="s",
                         ylabel="weight", ylog=True)
    return {f"{name}.csv": ("csv", rows), f"{name}.svg": ("svg", svg)}


def _run_certify_p(cfg, objs):
    pair = objs["pair"]
    rep = criteria.certify_poincare_line(pair, objs["scan"])
    result = {"certification": rep.to_json(), "pair": pair.to_json()}
    rows = [("holds", rep.holds), ("q", rep.q), ("median", rep.median),
            ("B+", rep.b_plus.value), ("B-", rep.b_minus.value),
            ("lower bound", rep.lower_bound), ("upper bound", rep.upper_bound)]
    span = 10.0 if not math.isfinite(rep.median) else max(10.0, 2.0 * abs(rep.median))
    center = rep.median if math.isfinite(rep.median) else 0.0
    arts = _weights_artifacts(pair.left, pair.right, center, span)
    status = "holds" if rep.holds else "does_not_hold"
    if not rep.holds:
        ce = cfg["counterexample"]
        try:
            f = osr.counterexample_search(pair, int(ce["budget"]), float(ce["threshold"]))
            value = osr.quotient(pair, f)
            result["counterexample"] = {"found": True, "quotient": value,
                                        "support": [float(f.grid[0]), float(f.grid[-1])]}
            arts["counterexample.csv"] = ("csv", list(f.csv_rows()))
            rows.append(("counterexample quotient", value))
        except WitnessNotFound as exc:
            result["counterexample"] = {"found": False, "reason": str(exc)}
            rows.append(("counterexample", "not found"))
    return status, result, rows, arts


def _run_certify_hp(cfg, objs):
    fam = objs["family"]
    rep = criteria.certify_hardy_poincare(fam, float(cfg["q"]), objs["scan"])
    result = {"certification": rep.to_json(), "family": fam.to_json()}
    rows = [("holds", rep.holds), ("q", rep.q), ("median", rep.median),
            ("H2", rep.h2.value if rep.h2 else None),
            ("lower bound", rep.lower_bound), ("upper bound", rep.upper_bound)]
    r = np.geomspace(1e-3, 1e3, 301)
    with np.errstate(all="ignore"):
        h = np.exp(fam.log_h(r))
    arts = {"family.csv": ("csv", [("r", "h")] + [(repr(float(a)), repr(float(b)))
                                                  for a, b in zip(r, h)]),
            "family.svg": ("svg", _svg.line_plot([("h", r, h)], title="radial weight h",
                                                 xlabel="r", ylabel="h", xlog=True, ylog=True))}
    return ("holds" if rep.holds else "does_not_hold"), result, rows, arts


def _run_derive_h(cfg, objs):
    prof = objs["profile"]
    der = hc.derive_hardy(prof, check_conditions=bool(cfg["check_conditions"]))
    result = {"derivation": der.to_json()}
    rows = [("sign", der.sign), ("C_H", der.c_h), ("c1", der.c1), ("c2", der.c2),
            ("C_H (family form)", der.c_h_family), ("optimal", der.optimal)]
    lo, hi = cfg["plot_range"]
    r = np.geomspace(float(lo), float(hi), 301)
    with np.errstate(all="ignore"):
        w1, w2 = np.exp(der.w1.log_h(r)), np.exp(der.w2.log_h(r))
    arts = {"weights.csv": ("csv", [("r", "w1", "w2")] + [
        (repr(float(a)), repr(float(b)), repr(float(c))) for a, b, c in zip(r, w1, w2)]),
        "weights.svg": ("svg", _svg.line_plot([("w1", r, w1), ("w2", r, w2)],
                                              title="derived Hardy weights", xlabel="r",
                                              ylabel="weight", xlog=True, ylog=True))}
    return "ok", result, rows, arts


def _run_estimate(cfg, objs):
    pair = objs["pair"]
    prob = cfg["problem"]
    q = float(cfg["q"]) if cfg["q"] is not None else pair.q
    kw = dict(restarts=int(cfg["restarts"]), seed=int(cfg["seed"]))
    if prob == "poincare":
        span = cfg["span"]
        est = osr.estimate_poincare_constant(pair, int(cfg["n_nodes"]),
                                             None if span is None else float(span), q=q,
                                             max_iter=int(cfg["max_iter"]), **kw)
    elif prob == "hardy":
        est = osr.estimate_hardy_constant(pair, q, int(cfg["n_nodes"]),
                                          float(cfg["span"] or 1e3),
                                          inner=None if cfg["inner"] is None else float(cfg["inner"]),
                                          max_iter=int(cfg["max_iter"]), **kw)
    else:
        est = osr.estimate_muckenhoupt_constant(pair.left, pair.right, q, int(cfg["n_nodes"]),
                                                float(cfg["span"] or 60.0), **kw)
    result = {"estimate": {"value": est.value, "iterations": est.iterations,
                           "converged": est.converged, "method": est.method,
                           "notes": list(est.notes), "trend": list(est.trend)}}
    rows = [("problem", prob), ("value", est.value), ("method", est.method),
            ("iterations", est.iterations), ("converged", est.converged)]
    f = est.maximizer
    xlog = prob == "hardy"
    x = f.grid[1:] if xlog else f.grid
    y = f.values[1:] if xlog else f.values
    arts = {"maximizer.csv": ("csv", list(f.csv_rows())),
            "maximizer.svg": ("svg", _svg.line_plot([("maximizer", x, y)], title="maximizer",
                                                    xlabel="r" if xlog else "s", ylabel="f",
                                                    xlog=xlog))}
    return "ok", result, rows, arts


def _run_simulate(cfg, objs):
    params = objs["params"]
    tr = fastdiff.run_and_fit(dict(cfg["initial"]), params, float(cfg["tau_end"]),
                              n_cells=int(cfg["n_cells"]), dtau=float(cfg["dtau"]),
                              r_max=None if cfg["r_max"] is None else float(cfg["r_max"]),
                              scheme=objs["scheme"],
                              check_regularization=bool(cfg["check_regularization"]))
    result = {"trace": tr.summary(), "params": params.to_json()}
    rows = [("status", tr.status), ("mu", tr.fitted_mu), ("lambda", tr.fitted_lambda),
            ("fit r2", tr.fit_r2), ("D_star", tr.D_star),
            ("mass drift", abs(tr.mass[1] - tr.mass[0]) / tr.mass[0]),
            ("sandwich kept", tr.sandwich_ok)]
    arts = {"trace.csv": ("csv", list(tr.csv_rows())),
            "trace.svg": ("svg", _svg.line_plot([("E", tr.tau, tr.entropy),
                                                 ("I", tr.tau, tr.fisher)],
                                                title="relative entropy", xlabel="tau",
                                                ylabel="E, I", ylog=True))}
    return "ok", result, rows, arts


_RUNNERS = {"certify-p": _run_certify_p, "certify-hp": _run_certify_hp,
            "derive-h": _run_derive_h, "estimate": _run_estimate, "simulate": _run_simulate}


def _exit_for(status: str) -> int:
    return {"does_not_hold": EXIT_DOES_NOT_HOLD, "error": EXIT_FAIL}.get(status, EXIT_OK)


def _emit(out: Path, cfg: dict, status: str, result: dict, rows, arts, elapsed: float):
    out.mkdir(parents=True, exist_ok=True)
    report = {"schema": SCHEMA_VERSION, "version": __version__, "command": cfg["command"],
              "status": status, "config": cfg, "result": result}
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True)
                                     + "\n")
    # wall-clock data lives apart from report.json so reports stay byte-identical
    (out / "timing.json").write_text(json.dumps({"elapsed_seconds": elapsed,
                                                 "finished_at": time.time()}) + "\n")
    text = f"hardycert {cfg['command']}  status: {status}\n\n"
    text += _table([(k, _fmt(v)) for k, v in rows]) if rows else ""
    (out / "report.txt").write_text(text)
    for name, (kind, payload) in arts.items():
        if kind == "csv":
            _write_csv(out / name, payload)
        else:
            _write_text(out / name, payload)


def _run_single(cfg: dict, out: Path) -> int:
    t0 = time.perf_counter()
    try:
        objs = _build_objects(cfg)
        status, result, rows, arts = _RUNNERS[cfg["command"]](cfg, objs)
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001 - every tool failure becomes a structured report
        status = "error"
        result = {"error": {"type": type(exc).__name__, "message": str(exc),
                            "traceback": traceback.format_exc().splitlines()[-6:]}}
        rows = [("error", f"{type(exc).__name__}: {exc}")]
        arts = {}
    _emit(out, cfg, status, result, rows, arts, time.perf_counter() - t0)
    return _exit_for(status)


def _run_sweep(cfg: dict, out: Path) -> int:
    t0 = time.perf_counter()
    runs = []
    for i, v in enumerate(cfg["values"]):
        sub = _set_path(copy.deepcopy(cfg["base"]), cfg["parameter"], v)
        runs.append((i, v, resolve_config(sub), out / f"run_{i:03d}"))
    threads = max(1, int(os.environ.get("HARDY_CERT_THREADS", os.cpu_count() or 1)))
    with ThreadPoolExecutor(max_workers=min(threads, len(runs))) as pool:
        codes = list(pool.map(lambda r: _run_single(r[2], r[3]), runs))
    summary = []
    for (i, v, sub, path), code in zip(runs, codes):
        rep = json.loads((path / "report.json").read_text())
        summary.append({"index": i, "value": v, "status": rep["status"], "exit": code,
                        "directory": path.name})
    if any(c == EXIT_FAIL for c in codes):
        status = "error"
    elif any(c == EXIT_DOES_NOT_HOLD for c in codes):
        status = "does_not_hold"
    else:
        status = "ok"
    rows = [(f"{s['index']:03d} {cfg['parameter']}={s['value']}", s["status"]) for s in summary]
    _emit(out, cfg, status, {"runs": summary}, rows, {}, time.perf_counter() - t0)
    return _exit_for(status)


def run(config: dict, output: str | os.PathLike, command: str | None = None) -> int:
    """Resolve `config`, run it and write artifacts to `output`; returns the exit code."""
    cfg = resolve_config(config, command)
    out = Path(output)
    if cfg["command"] == "sweep":
        return _run_sweep(cfg, out)
    return _run_single(cfg, out)


# --------------------------------------------------------------------------- #
# argparse

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardycert",
                                     description="Certify and estimate weighted Poincaré and "
                                                 "Hardy inequality constants.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "certify-p": "Poincaré criterion on the line for a weight pair",
        "certify-hp": "Hardy-Poincaré criterion for a radial weight",
        "derive-h": "derive Hardy weights from a radial profile",
        "estimate": "Rayleigh-quotient estimate of an optimal constant",
        "sweep": "run a base config over a list of parameter values",
        "simulate": "fast-diffusion entropy decay run",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("config", help="JSON config file ('-' reads stdin)")
        p.add_argument("-o", "--output", default=None,
                       help="output directory (default: config 'output' or ./hardycert-out)")
    return parser


def _load(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = _load(args.config)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        output = args.output or raw.get("output") or "hardycert-out"
        return run(raw, output, args.command)
    except ConfigError as exc:
        print(json.dumps({"error": {"type": "ConfigError", "message": str(exc)}}),
              file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
