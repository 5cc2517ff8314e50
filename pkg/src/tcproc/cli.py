"""Command-line front end: ``tcproc {pmf,residual,simulate,moments,arrivals} --config FILE``.

Every table is a CSV whose leading ``#`` lines carry the library version
and the fully resolved configuration (output location aside); a JSON
sidecar repeats the configuration together with truncation certificates
and a content hash that excludes the timestamp.

Exit codes: 0 success, 1 tolerance failure, 2 configuration error,
3 numerical-method failure.
"""
import argparse
import copy
import datetime as _dt
import hashlib
import json
import os
import sys

import jsonschema
import numpy as np
import yaml

from . import __version__
from .bernstein import make_stable, make_tempered_stable
from .convderiv import QuadratureSpec
from .exceptions import (ConditionError, DomainError, InversionError, SamplerError,
                         TruncationError)
from .montecarlo import SimulationPlan, goodness_of_fit, simulate_poisson_tc, simulate_skellam_tc
from .poisson import IntensityFunction, TimeChangedPoissonLaw
from .skellam import SkellamParams, TimeChangedSkellamLaw
from .subordinator import InverseSubordinatorLaw

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
THREADS_ENV = "TCPROC_THREADS"
NORMALIZATION_TOL = 1e-5

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_POSS = {"type": "array", "items": _POS, "minItems": 1}
_INTS = {"type": "array", "items": {"type": "integer"}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["bernstein", "t_grid"],
    "properties": {
        "bernstein": {
            "type": "object", "additionalProperties": False, "required": ["family", "alpha"],
            "properties": {"family": {"enum": ["stable", "tempered_stable"]},
                           "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                           "beta": _POS},
        },
        "process": {"enum": ["poisson", "skellam"]},
        "intensity": {
            "type": "object", "additionalProperties": False, "required": ["kind"],
            "properties": {"kind": {"enum": ["constant", "named", "tabulated"]},
                           "lam": {"type": "number", "minimum": 0},
                           "profile": {"enum": ["sin2"]},
                           "times": _NUMS, "rates": _NUMS},
        },
        "skellam": {"type": "object", "additionalProperties": False,
                    "required": ["lambda1", "lambda2"],
                    "properties": {"lambda1": _POS, "lambda2": _POS}},
        "t_grid": _POSS,
        "x_max": {"type": "integer", "minimum": 0},
        "k_range": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "residual": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "equations": {"type": "array", "minItems": 1, "items": {"enum": [
                    "thm1", "thm3", "lemma1", "mgf_poisson", "skellam_system", "skellam_mgf",
                    "density_eq"]}},
                "x": _INTS, "k": _INTS, "lam": _POSS, "theta": _NUMS, "skellam_theta": _NUMS,
                "u": _POSS,
                "v": {"type": "number", "minimum": 0},
                "tolerance": _POS,
            },
        },
        "moments": {"type": "object", "additionalProperties": False,
                    "properties": {"k_max": {"type": "integer", "minimum": 1, "maximum": 12},
                                   "covariance_paths": {"type": "integer", "minimum": 0}}},
        "arrivals": {"type": "object", "additionalProperties": False,
                     "properties": {"n": {"type": "array", "minItems": 1,
                                          "items": {"type": "integer", "minimum": 1}}}},
        "simulate": {"type": "object", "additionalProperties": False,
                     "properties": {"n_paths": {"type": "integer", "minimum": 1},
                                    "step": _POS,
                                    "block_size": {"type": "integer", "minimum": 1}}},
        "quadrature": {"type": "object", "additionalProperties": False,
                       "properties": {"eps_trunc": _POS,
                                      "n_cells": {"type": "integer", "minimum": 1},
                                      "nodes_per_cell": {"type": "integer", "minimum": 2},
                                      "order": {"type": "integer", "minimum": 8},
                                      "mesh_ratio": {"type": "number", "exclusiveMinimum": 0,
                                                     "exclusiveMaximum": 1}}},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"dir": {"type": "string"}, "prefix": {"type": "string"}}},
    },
}

DEFAULTS = {
    "process": "poisson",
    "intensity": {"kind": "constant", "lam": 1.0},
    "x_max": 10,
    "residual": {"equations": ["thm3"], "x": [0, 1, 2], "lam": [1.0], "theta": [-1.0, -0.5],
                 "u": [0.5, 1.0], "v": 0.0},
    "moments": {"k_max": 4, "covariance_paths": 20000},
    "arrivals": {"n": [1, 2, 3]},
    "simulate": {"n_paths": 100000, "block_size": 1 << 15},
    "quadrature": {"eps_trunc": 1e-13, "n_cells": 24, "nodes_per_cell": 12, "mesh_ratio": 0.25},
    "seed": 0,
    "threads": 1,
    "output": {"dir": ".", "prefix": "tcproc"},
}


class ConfigError(Exception):
    pass


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path, overrides=None):
    """Read, schema-validate and resolve defaults; raises :class:`ConfigError`."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    _recheck(cfg)
    return cfg


def _recheck(cfg):
    b = cfg["bernstein"]
    if b["family"] == "tempered_stable" and "beta" not in b:
        raise ConfigError("tempered_stable needs beta")
    if cfg["process"] == "skellam" and "skellam" not in cfg:
        raise ConfigError("process skellam needs a skellam section")
    it = cfg["intensity"]
    if it["kind"] == "constant" and "lam" not in it:
        raise ConfigError("constant intensity needs lam")
    if it["kind"] == "named" and "profile" not in it:
        raise ConfigError("named intensity needs profile")
    if it["kind"] == "tabulated" and ("times" not in it or "rates" not in it):
        raise ConfigError("tabulated intensity needs times and rates")
    if "k_range" in cfg and cfg["k_range"][0] > cfg["k_range"][1]:
        raise ConfigError("k_range must be [lo, hi] with lo <= hi")
    if list(cfg["t_grid"]) != sorted(set(cfg["t_grid"])):
        raise ConfigError("t_grid must be strictly increasing")
    try:
        build(cfg)
    except (DomainError, ConditionError) as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- model construction

def build(cfg):
    b = cfg["bernstein"]
    f = make_stable(b["alpha"]) if b["family"] == "stable" else make_tempered_stable(b["alpha"], b["beta"])
    qd = cfg["quadrature"]
    law = InverseSubordinatorLaw(f, eps_trunc=qd["eps_trunc"], n_cells=qd["n_cells"],
                                 nodes_per_cell=qd["nodes_per_cell"], order=qd.get("order"),
                                 quad=QuadratureSpec(ratio=qd["mesh_ratio"]))
    it = cfg["intensity"]
    if it["kind"] == "constant":
        intensity = IntensityFunction.homogeneous(it["lam"])
    elif it["kind"] == "named":
        intensity = IntensityFunction.named(it["profile"])
    else:
        intensity = IntensityFunction.tabulated(it["times"], it["rates"])
    pois = TimeChangedPoissonLaw(intensity, law)
    skel = None
    if "skellam" in cfg:
        skel = TimeChangedSkellamLaw(SkellamParams(cfg["skellam"]["lambda1"], cfg["skellam"]["lambda2"]), law)
    return law, pois, skel


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, str):
        return v
    return "%.15g" % float(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_outputs(cfg, command, header, rows, sidecar):
    """Write ``<prefix>_<command>.csv`` and ``.json``; returns the two paths."""
    out_dir = cfg["output"]["dir"]
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, f"{cfg['output']['prefix']}_{command}")
    # the output location is not part of the experiment, so it stays out of
    # the CSV echo and the hash; re-running elsewhere gives identical bytes
    experiment = {k: v for k, v in cfg.items() if k != "output"}
    cfg_line = json.dumps(_jsonable(experiment), sort_keys=True, separators=(",", ":"))
    with open(stem + ".csv", "w", newline="\n") as fh:
        fh.write(f"# tcproc {__version__} {command}\n")
        fh.write(f"# config {cfg_line}\n")
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")
    body = {"command": command, "version": __version__, "config": _jsonable(experiment),
            **_jsonable(sidecar)}
    digest = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    body["output"] = cfg["output"]
    with open(stem + ".csv", "rb") as fh:
        csv_digest = hashlib.sha256(fh.read()).hexdigest()
    body["csv_sha256"] = csv_digest
    body["hash"] = digest
    body["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    with open(stem + ".json", "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return stem + ".csv", stem + ".json"


# ---------------------------------------------------------------- commands

def _values(cfg):
    if cfg["process"] == "skellam":
        lo, hi = cfg.get("k_range", [-5, 5])
        return np.arange(lo, hi + 1)
    return np.arange(cfg["x_max"] + 1)


def cmd_pmf(cfg, args):
    law, pois, skel = build(cfg)
    model = skel if cfg["process"] == "skellam" else pois
    vals = _values(cfg)
    rows, certs = [], []
    for t in cfg["t_grid"]:
        p = model.pmf(vals, t)
        norm = model.normalization(t)
        c = norm["cutoff"]
        full = np.arange(-c, c + 1) if cfg["process"] == "skellam" else np.arange(c + 1)
        rest = full[(full < vals[0]) | (full > vals[-1])]
        unlisted = float(np.sum(model.pmf(rest, t))) if rest.size else 0.0
        corrected = float(p.sum()) + unlisted
        certs.append({**norm, "listed_sum": float(p.sum()), "unlisted_mass": unlisted,
                      "tail_corrected_sum": corrected, "deviation": abs(1.0 - corrected),
                      "passed": abs(1.0 - corrected) <= NORMALIZATION_TOL})
        rows.extend((t, int(v), pv) for v, pv in zip(vals, p))
    name = "k" if cfg["process"] == "skellam" else "x"
    write_outputs(cfg, "pmf", ["t", name, "probability"], rows, {"certificates": certs})
    return EXIT_OK


def _residual_reports(cfg, law, pois, skel, tol):
    rc = cfg["residual"]
    ts = np.asarray(cfg["t_grid"], dtype=float)
    for eq in rc["equations"]:
        if eq == "thm3":
            yield pois.residual_homogeneous(rc["x"], ts, tolerance=tol or 1e-4)
        elif eq == "thm1":
            yield pois.residual_thm1(rc["x"], ts, v=rc["v"], tolerance=tol or 1e-3)
        elif eq == "lemma1":
            for lam in rc["lam"]:
                yield law.eigenfunction_residual(lam, ts, tolerance=tol or 1e-4)
        elif eq == "mgf_poisson":
            for th in rc["theta"]:
                yield pois.residual_mgf(th, ts, tolerance=tol or 1e-4)
        elif eq in ("skellam_system", "skellam_mgf"):
            if skel is None:
                raise ConfigError(f"{eq} needs a skellam section")
            if eq == "skellam_system":
                yield skel.residual_governing(rc.get("k", list(range(-2, 3))), ts, tolerance=tol or 1e-3)
            else:
                for th in rc.get("skellam_theta", skel.default_thetas()):
                    yield skel.residual_mgf(th, ts, tolerance=tol or 1e-4)
        elif eq == "density_eq":
            for t in ts:
                for u in rc["u"]:
                    yield law.density_equation_residual(t, u, tolerance=tol or 1e-3)


def cmd_residual(cfg, args):
    law, pois, skel = build(cfg)
    tol = cfg["residual"].get("tolerance")
    reports = list(_residual_reports(cfg, law, pois, skel, tol))
    keys = ["t", "x", "k", "v", "lam", "theta", "u"]
    rows = []
    for rep in reports:
        for r in rep.rows():
            rows.append([rep.equation] + [r.get(k, "") for k in keys] +
                        [r["lhs"], r["rhs"], r["residual"], rep.tolerance])
    summary = [{"equation": r.equation, "max_residual": r.max_residual, "tolerance": r.tolerance,
                "passed": r.passed, "points": int(r.lhs.size)} for r in reports]
    ok = all(s["passed"] for s in summary)
    write_outputs(cfg, "residual", ["equation"] + keys + ["lhs", "rhs", "residual", "tolerance"],
                  rows, {"reports": summary, "passed": ok})
    for r in reports:
        print(r)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_simulate(cfg, args):
    law, pois, skel = build(cfg)
    sc = cfg["simulate"]
    plan = SimulationPlan(cfg["seed"], sc["n_paths"], tuple(cfg["t_grid"]), sc.get("step"),
                          cfg["threads"], sc["block_size"])
    if cfg["process"] == "skellam":
        emp = simulate_skellam_tc(skel.params, law, plan)
        model = skel
    else:
        emp = simulate_poisson_tc(pois, plan)
        model = pois
    gof = []
    for j, t in enumerate(plan.t_checkpoints):
        c = model.cutoff(t)
        support = (-c, c) if cfg["process"] == "skellam" else (0, c)
        rep = goodness_of_fit(emp, lambda v, t=t: model.pmf(v, t), j, support=support)
        gof.append({"t": t, **rep.to_dict()})
    rows = list(emp.table())
    write_outputs(cfg, "simulate", ["t", "value", "count", "probability", "half_width"], rows,
                  {"goodness_of_fit": gof, "step": plan.resolved_step, "n_paths": plan.n_paths,
                   "block_size": plan.block_size})
    return EXIT_OK


def cmd_moments(cfg, args):
    law, pois, skel = build(cfg)
    if cfg["process"] != "poisson":
        raise ConfigError("moments are available for the poisson process")
    mc = cfg["moments"]
    km = mc["k_max"]
    rows = []
    for t in cfg["t_grid"]:
        rows.append(["moment", t, ""] + [pois.moment(k, t) for k in range(1, km + 1)] +
                    [pois.variance(t), "", ""])
    n_cov = mc["covariance_paths"]
    if n_cov:
        from .montecarlo import block_rng
        for i, s in enumerate(cfg["t_grid"]):
            for j, t in enumerate(cfg["t_grid"]):
                est = pois.covariance(s, t, n_cov, rng=block_rng(cfg["seed"], 1000 + i * 97 + j))
                rows.append(["covariance", s, t] + [""] * km + [est.value, est.half_width,
                                                                  est.cauchy_schwarz_bound])
    header = ["kind", "t", "s_or_t2"] + [f"m{k}" for k in range(1, km + 1)] + ["variance_or_cov",
                                                                               "half_width", "cs_bound"]
    write_outputs(cfg, "moments", header, rows, {"k_max": km})
    return EXIT_OK


def cmd_arrivals(cfg, args):
    law, pois, skel = build(cfg)
    if cfg["process"] != "poisson":
        raise ConfigError("arrival times are available for the poisson process")
    rows = []
    for n in cfg["arrivals"]["n"]:
        for t in cfg["t_grid"]:
            F = pois.arrival_cdf(n, t)
            X = pois.cutoff(t)
            tail = 1.0 - float(np.sum(pois.pmf(np.arange(n), t)))
            dform = (pois.arrival_cdf_derivative_form(n, t)
                     if pois.intensity.is_homogeneous and n <= 4 else float("nan"))
            rows.append([n, t, F, tail, abs(F - tail), dform, X])
    write_outputs(cfg, "arrivals", ["n", "t", "cdf", "count_tail", "duality_abs", "derivative_form",
                                    "x_cutoff"], rows, {})
    return EXIT_OK


COMMANDS = {"pmf": cmd_pmf, "residual": cmd_residual, "simulate": cmd_simulate,
            "moments": cmd_moments, "arrivals": cmd_arrivals}


def make_parser():
    p = argparse.ArgumentParser(prog="tcproc", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"tcproc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="YAML experiment file")
        s.add_argument("--out", help="output directory (overrides output.dir)")
        s.add_argument("--seed", type=int, help="master seed (overrides config)")
        s.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
        if name == "residual":
            s.add_argument("--tolerance", type=float, help="residual tolerance for every equation")
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        env = os.environ.get(THREADS_ENV)
        threads = args.threads if args.threads is not None else (int(env) if env else None)
        if threads is not None and threads < 1:
            raise ConfigError("threads must be >= 1")
        if getattr(args, "tolerance", None) is not None and not args.tolerance > 0:
            raise ConfigError("tolerance must be > 0")
        cfg = load_config(args.config, {"seed": args.seed, "threads": threads})
        if args.out:
            cfg["output"]["dir"] = args.out
        if getattr(args, "tolerance", None) is not None:
            cfg["residual"]["tolerance"] = args.tolerance
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ValueError) as exc:
        print(f"tcproc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InversionError, TruncationError, SamplerError, ArithmeticError) as exc:
        print(f"tcproc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
