"""Command-line runner: ``critreg {solve,probe,check,oracle,pipeline} --config cfg.json``.

Exit codes: 0 success, 2 invalid config, 3 solver non-convergence, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
import warnings

import jsonschema
import numpy as np

from . import oracles
from .continuity import Modulus, check_structure, dini_integral, make_sampling_plan
from .errors import CritregError, ValidationError
from .grid import Grid2D, ScalarField, gradient_field, read_field, write_field
from .oracles import manufactured
from .probe import (
    ProbePoint,
    cauchy_check,
    dyadic_profile,
    fit_exponent,
    lq_norm,
    normalize_at,
    singular_set,
    theoretical_alpha,
)
from .problem import ProblemSpec
from .solver import Coefficient, ModelField, SolveConfig, SolverError, solve_dirichlet

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

_num = {"type": "number"}
_point = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

MODULUS_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["holder", "log_power", "scaled", "dilated", "custom"]},
        "eps": _num, "beta": _num, "c": _num, "zeta": _num, "T": _num,
        "inner": {"$ref": "#/definitions/modulus"},
        "t": {"type": "array", "items": _num}, "w": {"type": "array", "items": _num},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "definitions": {"modulus": MODULUS_SCHEMA},
    "properties": {
        "command": {"enum": ["solve", "probe", "check", "oracle", "pipeline"]},
        "problem": {
            "type": "object",
            "properties": {
                "n": {"type": "integer"}, "p": _num, "lambda": _num, "Lambda": _num, "LambdaTilde": _num,
                "q": {"anyOf": [_num, {"const": "inf"}]},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {
                "nx": {"type": "integer", "minimum": 3}, "ny": {"type": "integer", "minimum": 3},
                "bounds": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
            },
            "required": ["nx", "ny"],
            "additionalProperties": False,
        },
        "coefficient": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["constant", "holder_bump", "affine"]},
                "value": _num, "amplitude": _num, "exponent": _num, "center": _point,
                "c0": _num, "cx": _num, "cy": _num,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "source": {
            "type": "object",
            "properties": {"kind": {"enum": ["zero", "constant", "manufactured"]}, "value": _num},
            "required": ["kind"],
            "additionalProperties": False,
        },
        "boundary": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["oracle", "affine", "constant"]},
                "name": {"type": "string"}, "p": _num, "n": {"type": "integer"}, "R": _num,
                "value": _num, "c0": _num, "cx": _num, "cy": _num,
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "eps0": _num, "eps_min": _num, "continuation_factor": _num, "newton_tol": _num,
                "max_newton": {"type": "integer"}, "armijo_c": _num, "cg_rtol": _num,
                "cg_maxiter": {"type": "integer"}, "max_backtracks": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "modulus": {"$ref": "#/definitions/modulus"},
        "probe": {
            "type": "object",
            "properties": {
                "rho": _num, "K": {"type": "integer", "minimum": 4}, "grad_tol": _num, "alpha_M": _num,
                "eps0": _num, "slack": _num, "points": {"type": "array", "items": _point},
                "skip_singular": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "check": {
            "type": "object",
            "properties": {
                "field": {"enum": ["model", "violation"]}, "n_pairs": {"type": "integer"},
                "n_shells": {"type": "integer"}, "n_dirs": {"type": "integer"}, "R": _num, "sigma": _num,
                "tol": _num,
            },
            "additionalProperties": False,
        },
        "oracle": {
            "type": "object",
            "properties": {"name": {"type": "string"}, "p": _num, "n": {"type": "integer"}, "R": _num},
            "required": ["name"],
            "additionalProperties": False,
        },
        "field": {"type": "string"},
        "output": {
            "type": "object",
            "properties": {"dir": {"type": "string"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class IOFailure(CritregError):
    pass


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config error at {where}: {exc.message}") from None
    build_spec(cfg)
    return cfg


def build_spec(cfg) -> ProblemSpec:
    pr = dict(cfg.get("problem", {}))
    q = pr.get("q", "inf")
    return ProblemSpec(
        n=pr.get("n", 2),
        p=pr.get("p", 2.0),
        lam=pr.get("lambda", 1.0),
        Lam=pr.get("Lambda", 1.0),
        Lam_tilde=pr.get("LambdaTilde", 1.0),
        q=math.inf if q == "inf" else float(q),
    )


def build_grid(cfg) -> Grid2D:
    g = cfg.get("grid")
    if g is None:
        raise ValidationError("config needs a 'grid' section for this command")
    b = g.get("bounds", [-1.0, 1.0, -1.0, 1.0])
    return Grid2D.from_bounds(g["nx"], g["ny"], *b)


def build_coefficient(cfg) -> Coefficient:
    c = dict(cfg.get("coefficient", {"kind": "constant", "value": 1.0}))
    kind = c.pop("kind")
    if kind == "constant":
        return Coefficient.constant(c.get("value", 1.0))
    if kind == "holder_bump":
        return Coefficient.holder_bump(c.get("amplitude", 0.5), c.get("exponent", 0.1), tuple(c.get("center", (0, 0))))
    return Coefficient.affine(c.get("c0", 1.0), c.get("cx", 0.0), c.get("cy", 0.0))


def build_boundary(cfg, grid):
    b = cfg.get("boundary", {"kind": "constant", "value": 0.0})
    if b["kind"] == "oracle":
        params = {k: b[k] for k in ("p", "n", "R") if k in b}
        orc = oracles.by_name(b.get("name", "saddle"), **params)
        return orc.sample(grid), orc
    if b["kind"] == "affine":
        return grid.sample(lambda x, y: b.get("c0", 0.0) + b.get("cx", 0.0) * x + b.get("cy", 0.0) * y), None
    return grid.sample(lambda x, y: np.full_like(x, b.get("value", 0.0))), None


def build_source(cfg, grid, model, orc):
    s = cfg.get("source", {"kind": "zero"})
    if s["kind"] == "zero":
        return grid.sample(lambda x, y: np.zeros_like(x))
    if s["kind"] == "constant":
        return grid.sample(lambda x, y: np.full_like(x, s.get("value", 1.0)))
    if orc is None:
        raise ValidationError("source kind 'manufactured' needs an oracle boundary")
    return manufactured(model, orc, grid)


def build_modulus(cfg):
    m = cfg.get("modulus")
    return None if m is None else Modulus.from_dict(m)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj)}")


def _clean(obj):
    """Replace non-finite floats so the report is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else ("-inf" if f < 0 else "nan"))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class Run:
    """State of one CLI invocation: config, output directory, report."""

    def __init__(self, cfg, out_dir, threads=1, seed=0):
        self.cfg = cfg
        self.out = out_dir
        self.seed = seed
        self.report = {
            "command": cfg.get("command"),
            "config": cfg,
            "threads": threads,
            "seed": seed,
            "timings": {},
            "warnings": [],
        }
        self.spec = build_spec(cfg)
        if not self.spec.within_paper_range:
            self.warn(f"p={self.spec.p} lies outside (2 - 1/n, n) = ({2 - 1 / self.spec.n:g}, {self.spec.n}); "
                      "within_paper_range = false")
        self.report["problem"] = self.spec.as_dict()

    def warn(self, msg):
        self.report["warnings"].append(msg)
        logger.warning(msg)

    def path(self, name):
        return os.path.join(self.out, name)

    def timed(self, key, fn, *args, **kw):
        t = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.report["timings"][key] = time.perf_counter() - t

    # --- stages --------------------------------------------------------
    def solve(self):
        grid = build_grid(self.cfg)
        model = ModelField(build_coefficient(self.cfg), self.spec.p)
        boundary, orc = build_boundary(self.cfg, grid)
        mu = build_source(self.cfg, grid, model, orc)
        scfg = SolveConfig(**self.cfg.get("solver", {}))
        try:
            res = self.timed("solve", solve_dirichlet, model, mu, boundary, scfg)
        except SolverError as exc:
            self.report["solver"] = {"converged": False, "error": str(exc),
                                     "levels": [lv.as_dict() for lv in exc.levels]}
            if exc.u is not None:
                write_field(self.path("solution_failed.field"), exc.u)
            raise
        diag = res.as_dict()
        diag["converged"] = True
        diag["newton_levels"] = res.newton_levels
        self.report["solver"] = diag
        write_field(self.path("solution.field"), res.u)
        self.report["outputs"] = {"field": "solution.field"}
        self.mu = mu
        return res.u

    def probe(self, u: ScalarField, mu: ScalarField | None = None):
        pc = self.cfg.get("probe", {})
        rho = pc.get("rho", 0.5)
        K = pc.get("K")
        slack = pc.get("slack", 0.05)
        alpha_M = pc.get("alpha_M", 1.0)
        eps0 = pc.get("eps0", 0.1)
        target = theoretical_alpha(self.spec, alpha_M)
        du = gradient_field(u)
        points = [] if pc.get("skip_singular") else singular_set(du, pc.get("grad_tol"))
        self.report["singular_set"] = [pt.as_dict() for pt in points]
        for xy in pc.get("points", []):
            points.append(ProbePoint.at(u, xy[0], xy[1], du, pc.get("grad_tol")))
        if not points:
            self.warn("no singular points detected and none listed; nothing probed")
        omega = build_modulus(self.cfg)
        mu_norm = 0.0 if mu is None else lq_norm(mu, self.spec.q)
        results = []
        for k, pt in enumerate(points):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                prof = dyadic_profile(u, pt, rho, K, self.spec.p)
            for w in caught:
                self.warn(str(w.message))
            entry = {"point": pt.as_dict(), "target": {"alpha": target.value, "exclusive": target.exclusive}}
            sup = fit_exponent(prof, "sup", target if pt.is_singular else None, slack)
            entry["sup"] = sup.as_dict()
            entry["p_mean"] = fit_exponent(prof, "p_mean", None, slack).as_dict()
            entry["cauchy"] = cauchy_check(prof).as_dict()
            if omega is not None:
                params, _ = normalize_at(u, pt, mu_norm, omega, self.spec, eps0)
                for note in params.warnings:
                    self.warn(note)
                entry["normalization"] = params.as_dict()
            name = f"profile_{k}.csv"
            prof.write_csv(self.path(name))
            entry["profile"] = prof.as_dict()
            entry["profile_csv"] = name
            results.append(entry)
        self.report["probe"] = results
        verdicts = [e["sup"]["verdict"] for e in results if e["point"]["is_singular"]]
        return verdicts

    def check(self):
        cc = self.cfg.get("check", {})
        omega = build_modulus(self.cfg) or Modulus.holder(1.0)
        bounds = self.cfg.get("grid", {}).get("bounds", [-1.0, 1.0, -1.0, 1.0])
        plan = make_sampling_plan(tuple(bounds), cc.get("n_pairs", 100), cc.get("n_shells", 20),
                                  cc.get("n_dirs", 8), seed=self.seed)
        if cc.get("field", "model") == "model":
            a = ModelField(build_coefficient(self.cfg), self.spec.p)
        else:
            p = self.spec.p

            def a(X, xi):
                norm = np.linalg.norm(xi, axis=-1, keepdims=True)
                return norm ** (p - 2) * xi / np.linalg.norm(X, axis=-1, keepdims=True)

        rep = self.timed("structure", check_structure, a, self.spec, omega, plan, cc.get("tol", 1e-4))
        self.report["structure"] = rep.as_dict()
        R = cc.get("R", min(1.0, omega.T))
        dini = self.timed("dini", dini_integral, omega, self.spec.p, R, cc.get("sigma", 0.1))
        d = dini.as_dict()
        d["verdict"] = "diverges" if dini.diverges else "admissible"
        d["modulus"] = omega.describe()
        d["R"] = R
        self.report["dini"] = d
        return rep.verdict

    def oracle(self):
        oc = self.cfg.get("oracle")
        if oc is None:
            raise ValidationError("oracle command needs an 'oracle' section")
        params = {k: oc[k] for k in ("p", "n", "R") if k in oc}
        orc = oracles.by_name(oc["name"], **params)
        self.report["oracle"] = orc.describe()
        if orc.dim == 2:
            grid = build_grid(self.cfg)
            write_field(self.path("oracle.field"), orc.sample(grid))
            self.report["outputs"] = {"field": "oracle.field"}


def run(cfg: dict, out_dir: str, threads=1, seed=0):
    """Execute a validated config; returns ``(exit_code, report)``."""
    command = cfg.get("command")
    if command is None:
        raise ValidationError("config needs a 'command'")
    os.makedirs(out_dir, exist_ok=True)
    r = Run(cfg, out_dir, threads, seed)
    code = EXIT_OK
    try:
        if command == "solve":
            r.solve()
        elif command == "probe":
            if "field" not in cfg:
                raise ValidationError("probe command needs a 'field' path")
            try:
                u = read_field(cfg["field"])
            except (OSError, ValueError) as exc:
                raise IOFailure(f"cannot read field file {cfg['field']}: {type(exc).__name__}: {exc}") from exc
            mu = None
            if "source" in cfg and cfg["source"]["kind"] == "constant":
                mu = u.grid.sample(lambda x, y: np.full_like(x, cfg["source"].get("value", 1.0)))
            r.probe(u, mu)
        elif command == "check":
            r.check()
        elif command == "oracle":
            r.oracle()
        elif command == "pipeline":
            u = r.solve()
            verdicts = r.probe(u, r.mu)
            ok = r.check()
            r.report["verdict"] = {
                "points": verdicts,
                "structure": "pass" if ok else "fail",
                "overall": "pass" if verdicts and all(v == "pass" for v in verdicts) else "fail",
            }
    except SolverError as exc:
        r.report["error"] = str(exc)
        code = EXIT_SOLVER
    write_report(r.report, os.path.join(out_dir, "report.json"))
    return code, r.report


def write_report(report, path):
    with open(path, "w") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="critreg", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["solve", "probe", "check", "oracle", "pipeline"])
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0, help="seed for sampling plans")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if not isinstance(cfg, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_VALIDATION
    cfg.setdefault("command", args.command)
    if cfg["command"] != args.command:
        print(f"error: config command {cfg['command']!r} does not match {args.command!r}", file=sys.stderr)
        return EXIT_VALIDATION
    out = args.out or cfg.get("output", {}).get("dir", ".")
    try:
        validate_config(cfg)
        code, _ = run(cfg, out, args.threads, args.seed)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IOFailure, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CritregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if code == EXIT_SOLVER:
        print("error: solver did not converge; see report.json", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
