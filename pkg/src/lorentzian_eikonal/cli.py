"""Command-line front end: JSON run configurations, tasks and report files.

Every task writes ``report.json`` with the top-level keys
``task, config_digest, seed, results, violations, timings`` plus task
specific CSV files into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .causal import CauchySurface, InitialDatum
from .distance import OracleGrid, distance_oracle_dag, lorentz_distance, write_distance_table_csv
from .errors import ConfigError, DomainEdge, EikonalError, NonDifferentiable
from .expression import parse_expression
from .lax_oleinik import GridSpec, calibrated_ray, calibration_defect, solve_at, solve_grid
from .spacetime import Spacetime
from .tolerances import DEFAULT
from .verify import (
    Orientation,
    SequenceRule,
    counterexample_family,
    eikonal_residual,
    stability_experiment,
    uniqueness_audit,
    verify_field,
)

TASKS = ("solve", "verify", "ray", "stability", "counterexample", "distance")
CONFIG_KEYS = {"task", "spacetime", "surface", "grid", "tolerances", "output", "seed", "options"}
DEFAULT_SEED = 42
EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2


@dataclass
class RunConfig:
    task: str
    spacetime: Spacetime | None
    surface: CauchySurface | None
    grid: GridSpec | None
    tolerances: object
    output: Path
    seed: int
    options: dict
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def digest(self):
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @classmethod
    def from_dict(cls, raw):
        """Validate a configuration document; raises ``ConfigError``."""
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        task = raw.get("task")
        if task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
        tol = DEFAULT.override(**raw.get("tolerances", {}))
        seed = raw.get("seed", DEFAULT_SEED)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        out = raw.get("output", {})
        if isinstance(out, str):
            out = {"dir": out}
        if set(out) - {"dir"}:
            raise ConfigError(f"unknown output keys: {sorted(set(out) - {'dir'})}")
        out_dir = Path(os.environ.get("LORENTZ_EIKONAL_OUT") or out.get("dir", "out"))
        options = raw.get("options", {})
        if not isinstance(options, dict):
            raise ConfigError("options must be an object")

        st = surface = grid = None
        try:
            if "spacetime" in raw:
                st = Spacetime.from_config(raw["spacetime"])
            if "surface" in raw:
                if st is None:
                    raise ConfigError("a surface needs a spacetime")
                surface = _surface_from_config(st, raw["surface"])
            if "grid" in raw:
                grid = GridSpec.from_config(raw["grid"])
        except ConfigError:
            raise
        except (EikonalError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {type(exc).__name__}: {exc}") from None
        if grid is not None and st is not None:
            pts = grid.points().reshape(-1, st.dim)
            if pts.shape[1] != st.dim or not all(st.slab.contains(p) for p in (pts.min(0), pts.max(0))):
                raise ConfigError("grid must lie inside the slab")
            if surface is not None and pts[:, 0].max() >= surface.level:
                raise ConfigError("grid must lie strictly before the surface")
        needs = {"solve": ("spacetime", "surface", "grid"), "verify": ("spacetime", "surface", "grid"),
                 "ray": ("spacetime", "surface"), "stability": ("spacetime", "surface", "grid"),
                 "distance": ("spacetime",), "counterexample": ()}[task]
        missing = [k for k in needs if k not in raw]
        if missing:
            raise ConfigError(f"task {task} needs {missing}")
        return cls(task, st, surface, grid, tol, out_dir, seed, options, raw)


def _surface_from_config(st, cfg):
    unknown = set(cfg) - {"level", "domain", "datum"}
    if unknown:
        raise ConfigError(f"unknown surface keys: {sorted(unknown)}")
    datum = InitialDatum.from_config(cfg.get("datum", {"form": "constant", "c": 0.0}), st.labels[1:])
    level = float(cfg["level"])
    if not st.slab.t[0] < level <= st.slab.t[1]:
        raise ConfigError(f"surface level {level} outside the slab")
    return CauchySurface.over(st, level, datum, cfg.get("domain"))


# tasks ----------------------------------------------------------------------------

def _sample_points(grid, n, rng, margin=2e-4):
    lo = np.array([a[0] for a in grid.axes]) + margin
    hi = np.array([a[-1] for a in grid.axes]) - margin
    return lo + rng.random((n, len(lo))) * (hi - lo)


def _reference(cfg, st):
    text = cfg.options.get("reference")
    if text is None:
        return None
    expr = parse_expression(text, st.labels)
    return lambda P: np.broadcast_to(expr.evaluate({lab: P[..., i] for i, lab in enumerate(st.labels)}),
                                     P.shape[:-1])


def _task_solve(cfg, out):
    st, surface = cfg.spacetime, cfg.surface
    workers = int(os.environ.get("LORENTZ_EIKONAL_THREADS", "1") or 1)
    fld = solve_grid(st, surface, cfg.grid, tol=cfg.tolerances, workers=workers)
    fld.to_csv(out / "field.csv")
    results = {"grid_shape": list(cfg.grid.shape), "field": fld.summary()}
    ref = _reference(cfg, st)
    if ref is not None:
        results["max_error"] = fld.max_error(ref)
    rng = np.random.default_rng(cfg.seed)
    n_probe = int(cfg.options.get("residual_probes", 20))
    res = []
    for p in _sample_points(cfg.grid, n_probe, rng):
        try:
            res.append(abs(eikonal_residual(st, fld, p, tol=cfg.tolerances)))
        except (DomainEdge, NonDifferentiable):
            continue
    results["max_residual"] = float(max(res)) if res else None
    violations = [{"point": p, "error": e} for p, e in fld.errors]
    return results, violations


def _task_verify(cfg, out):
    st = cfg.spacetime
    rng = np.random.default_rng(cfg.seed)
    pts = _sample_points(cfg.grid, int(cfg.options.get("probes", 30)), rng)

    def fld(p):
        return solve_at(st, cfg.surface, p, tol=cfg.tolerances).value

    report = verify_field(st, fld, pts, seed=cfg.seed, tol=cfg.tolerances)
    with open(out / "violations.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test"] + list(st.labels) + ["gVV"])
        for v in report.violations:
            w.writerow([v["test"]] + [f"{c:.17g}" for c in v["point"]] + [f"{v['gVV']:.17g}"])
    results = report.as_dict()
    results["max_residual"] = results["residual_max"]
    return results, results.pop("violations")


def _task_ray(cfg, out, point):
    st, surface = cfg.spacetime, cfg.surface
    r = solve_at(st, surface, point, tol=cfg.tolerances)
    ray = calibrated_ray(st, surface, r, tol=cfg.tolerances)
    defect = calibration_defect(st, surface, r, ray, tol=cfg.tolerances)
    ray.to_csv(out / "ray.csv", st.labels)
    results = {"solve": r.as_dict(), "length": float(ray.params[-1]), "calibration_defect": defect}
    violations = [] if defect < cfg.tolerances.tol_cal else [{"calibration_defect": defect}]
    return results, violations


def _task_stability(cfg, out, terms):
    ns = [2 ** k for k in range(terms)]
    rule_name = cfg.options.get("rule", "sine")
    if rule_name not in ("sine", "shift"):
        raise ConfigError(f"unknown stability rule {rule_name!r}")
    rule = SequenceRule.sine() if rule_name == "sine" else SequenceRule.shift()
    rep = stability_experiment(cfg.spacetime, cfg.surface, rule, cfg.grid, ns, tol=cfg.tolerances)
    with open(out / "stability.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "e_n", "bound"])
        for n, e, b in zip(rep.ns, rep.errors, rep.bounds):
            w.writerow([n, f"{e:.17g}", f"{b:.17g}"])
    violations = [{"n": n, "e_n": e, "bound": b} for n, e, b, ok in
                  zip(rep.ns, rep.errors, rep.bounds, rep.dominated) if not ok]
    return rep.as_dict(), violations


def _task_counterexample(cfg, out, c):
    fam = counterexample_family(c)
    st = fam.st
    surface = CauchySurface.over(st, 0.0, InitialDatum.constant(0.0))
    rng = np.random.default_rng(cfg.seed)
    t_lo = max(st.slab.t[0] + 0.05, 2 * c)
    ts = np.linspace(t_lo, -0.05, 12)
    pts = np.array([[t, y] for t in ts for y in rng.uniform(-1, 1, 2)])
    audit = uniqueness_audit(st, surface, fam, fam.variational, pts, np.linspace(-1, 1, 21)[:, None],
                             seed=cfg.seed, tol=cfg.tolerances)
    diffs = fam.disagreement(pts)
    below = pts[:, 0] < c
    region_exact = bool(np.allclose(diffs[~below], 0.0, rtol=0, atol=1e-12)
                        and np.allclose(diffs[below], 2 * (c - pts[below, 0]), rtol=0, atol=1e-9))
    with open(out / "counterexample.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(st.labels) + ["u_c", "u_phi"])
        for p in pts:
            w.writerow([f"{v:.17g}" for v in p] + [f"{fam(p):.17g}", f"{fam.variational(p):.17g}"])
    results = {
        "c": c,
        "viscosity": audit.viscosity,
        "boundary_error": audit.boundary_error,
        "orientation": audit.orientation.value,
        "disagreement_region": f"{st.labels[0]} < {c}",
        "disagreement_matches": region_exact,
        "failed_premises": audit.failed_premises,
    }
    violations = []
    if not audit.viscosity:
        violations.append({"check": "viscosity"})
    if audit.orientation is not Orientation.MIXED:
        violations.append({"check": "orientation", "got": audit.orientation.value})
    return results, violations


def _task_distance(cfg, out, x, y):
    st = cfg.spacetime
    r = lorentz_distance(st, x, y, tol=cfg.tolerances)
    results = {"from": list(x), "to": list(y), "value": r.value, "backend": r.backend.value}
    if cfg.options.get("oracle"):
        og = cfg.options["oracle"] if isinstance(cfg.options["oracle"], dict) else {}
        results["oracle"] = distance_oracle_dag(st, x, y, OracleGrid(**og), strict=False)
    write_distance_table_csv(out / "distance.csv", [(x, y, r.value, r.backend.value)], st.labels)
    return results, []


def run(cfg, **task_args):
    """Execute ``cfg``; returns the exit status and writes ``report.json``."""
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    report = {"task": cfg.task, "config_digest": cfg.digest, "seed": cfg.seed,
              "results": {}, "violations": [], "timings": {}}
    status = EXIT_OK
    try:
        if cfg.task == "solve":
            results, violations = _task_solve(cfg, out)
        elif cfg.task == "verify":
            results, violations = _task_verify(cfg, out)
        elif cfg.task == "ray":
            results, violations = _task_ray(cfg, out, task_args["point"])
        elif cfg.task == "stability":
            results, violations = _task_stability(cfg, out, task_args.get("terms", 5))
        elif cfg.task == "counterexample":
            results, violations = _task_counterexample(cfg, out, task_args["c"])
        else:
            results, violations = _task_distance(cfg, out, task_args["x"], task_args["y"])
        report["results"], report["violations"] = results, violations
    except ConfigError:
        raise
    except EikonalError as exc:
        report["results"]["error"] = f"{type(exc).__name__}: {exc}"
        status = EXIT_COMPUTE
    report["timings"]["wall_seconds"] = time.perf_counter() - started
    with open(out / "report.json", "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
    return status, report


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# argument parsing -------------------------------------------------------------------

def _event(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated coordinates, got {text!r}") from None


def build_parser():
    p = argparse.ArgumentParser(prog="lorentz-eikonal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_text):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--out", type=Path, default=None, help="output directory")
        return s

    with_config("solve", "evaluate the solution on a grid")
    with_config("verify", "sampled viscosity, residual and orientation checks")
    s = with_config("ray", "calibrated ray from one event")
    s.add_argument("--point", required=True, type=_event)
    s = with_config("stability", "perturbed data e_n table")
    s.add_argument("--terms", type=int, default=5)
    s = sub.add_parser("counterexample", help="non-uniqueness family |x - c| + c")
    s.add_argument("--c", required=True, type=float)
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s = with_config("distance", "Lorentzian distance between two events")
    s.add_argument("--from", dest="x", required=True, type=_event)
    s.add_argument("--to", dest="y", required=True, type=_event)
    return p


def _load(path, task):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    if isinstance(raw, dict):
        raw.setdefault("task", task)
        if raw["task"] != task:
            raise ConfigError(f"configuration is for task {raw['task']!r}, not {task!r}")
    return raw


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "counterexample":
            raw = {"task": "counterexample", "seed": args.seed}
            task_args = {"c": args.c}
        else:
            raw = _load(args.config, args.command)
            task_args = {k: getattr(args, k) for k in ("point", "terms", "x", "y") if hasattr(args, k)}
        cfg = RunConfig.from_dict(raw)
        if args.out is not None:
            cfg.output = args.out
        if args.command == "counterexample" and args.c >= 0:
            raise ConfigError("--c must be negative")
        status, report = run(cfg, **task_args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    res = report["results"]
    grid = res.get("grid_shape", "-")
    resid = res.get("max_residual", "-")
    print(f"task={cfg.task} grid={grid} max_residual={resid} "
          f"wall={report['timings']['wall_seconds']:.3f}s violations={len(report['violations'])}")
    if "error" in res:
        print(res["error"], file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
