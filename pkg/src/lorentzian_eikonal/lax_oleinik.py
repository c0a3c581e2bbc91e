"""The variational solution ``u(x) = inf_{y in J+(x) on the surface} phi(y) - d(x, y)``.

Also hosts the forward calibrated rays, the future-side dual formula and the
upper support functions used in semiconcavity arguments.
"""

from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.interpolate import RegularGridInterpolator

from .causal import Relation, future_footprint, past_footprint, relation
from .distance import DistanceFrom, flat_distance, flat_distance_to
from .errors import EikonalError, NotInFuture, NotInPast, NullMinimizer, PointOutsideSlab
from .geodesic import (
    Geodesic,
    _flow,
    connect_maximal_geodesic,
    reparametrize_proper_time,
)
from .tolerances import DEFAULT

N_SCAN = 64


class Status(enum.Enum):
    INTERIOR_MIN = "interior_min"
    BOUNDARY_MIN = "boundary_min"
    DEGENERATE = "degenerate"


@dataclass
class SolveResult:
    """Value of the variational formula at ``point`` and everything that attains it."""

    point: np.ndarray
    value: float
    minimizers: list            # events on the surface
    distances: list             # d(point, minimizer) (or d(minimizer, point) on the future side)
    status: Status
    footprint: object = None
    side: str = "past"
    calibrated: Geodesic | None = None
    evaluations: int = 0

    @property
    def minimizer(self):
        return self.minimizers[0]

    def as_dict(self):
        return {
            "point": self.point.tolist(),
            "value": self.value,
            "minimizers": [m.tolist() for m in self.minimizers],
            "distances": list(self.distances),
            "status": self.status.value,
        }


# objective ----------------------------------------------------------------------

class _Objective:
    """``y -> phi(y) - d(x, (level, y))`` on spatial coordinates (``d(., x)`` on the future side)."""

    def __init__(self, st, surface, x, side, tol):
        self.st, self.surface, self.x, self.side, self.tol = st, surface, x, side, tol
        self.count = 0
        self.dist = None if st.is_flat else DistanceFrom(st, x, reverse=(side == "future"), tol=tol)

    def events(self, Y):
        Y = np.atleast_2d(Y)
        return np.concatenate([np.full((len(Y), 1), self.surface.level), Y], axis=1)

    def distances(self, Y):
        E = self.events(Y)
        if self.st.is_flat:
            return flat_distance(self.x, E) if self.side == "past" else flat_distance_to(E, self.x)
        out = self.dist.many(E)
        if not self.st.has_flat_cone:
            # the enclosing footprint over-covers: keep only causally related points
            for i, e in enumerate(E):
                a, b = (self.x, e) if self.side == "past" else (e, self.x)
                if out[i] == 0.0 and relation(self.st, a, b, self.tol) is Relation.UNRELATED:
                    out[i] = np.inf
        return out

    def many(self, Y):
        Y = np.atleast_2d(Y)
        self.count += len(Y)
        d = self.distances(Y)
        phi = np.asarray(self.surface.datum(Y), float)
        return np.where(np.isinf(d), np.inf, phi - np.where(np.isinf(d), 0.0, d))

    def one(self, y):
        return float(self.many(np.atleast_1d(np.asarray(y, float))[None, :])[0])


def _project(y, center, radius, lo, hi):
    r = np.linalg.norm(y - center)
    if r > radius:
        y = center + (y - center) * (radius / r)
    return np.clip(y, lo, hi)


def _scan_points_1d(lo, hi, n_scan):
    return np.linspace(lo, hi, n_scan + 1)[:, None]


def _candidates_1d(Y, f, keep=6):
    """Indices of local minima of the scan that may hold the global minimum."""
    finite = np.isfinite(f)
    if not np.any(finite):
        return []
    best = float(np.min(f[finite]))
    jumps = np.abs(np.diff(f[finite]))
    slack = 2.0 * float(np.max(jumps)) if len(jumps) else 0.0
    idx = []
    n = len(f)
    for i in range(n):
        if not finite[i]:
            continue
        left = f[i - 1] if i > 0 else np.inf
        right = f[i + 1] if i < n - 1 else np.inf
        if f[i] <= left and f[i] <= right and f[i] <= best + slack:
            idx.append(i)
    idx.sort(key=lambda i: f[i])
    return idx[:keep]


def _minimize(st, surface, x, side, tol, n_scan, grid_resolution):
    x = np.asarray(x, float)
    if x.shape != (st.dim,):
        raise ValueError(f"expected an event with {st.dim} coordinates")
    if not st.slab.contains(x):
        raise PointOutsideSlab(f"event {x} outside the slab")
    region = future_footprint(st, surface, x) if side == "past" else past_footprint(st, surface, x)
    center, R = region.center, region.radius
    lo = np.array([b[0] for b in surface.domain])
    hi = np.array([b[1] for b in surface.domain])
    c_clip = np.clip(center, lo, hi)

    threshold = (2.0 / n_scan) * grid_resolution if grid_resolution else tol.tol_cone
    if R < threshold:
        y = c_clip
        ev = surface.event(y)
        return SolveResult(x, float(surface.datum(y[None, :])[0]), [ev], [0.0], Status.DEGENERATE,
                           region, side)

    obj = _Objective(st, surface, x, side, tol)
    n = st.dim - 1
    b_lo = np.maximum(center - R, lo)
    b_hi = np.minimum(center + R, hi)
    refined = []
    if n == 1:
        Y = _scan_points_1d(b_lo[0], b_hi[0], n_scan)
        f = obj.many(Y)
        for i in _candidates_1d(Y[:, 0], f):
            a = Y[max(i - 1, 0), 0]
            b = Y[min(i + 1, len(Y) - 1), 0]
            res = optimize.minimize_scalar(lambda s: obj.one([s]), bounds=(a, b), method="bounded",
                                           options={"xatol": 1e-12, "maxiter": 500})
            y_opt, f_opt = np.array([res.x]), float(res.fun)
            if f[i] < f_opt:
                y_opt, f_opt = Y[i].copy(), float(f[i])
            refined.append((y_opt, f_opt))
    else:
        n_axis = n_scan if st.is_flat else min(n_scan, 12)
        axes = [np.linspace(b_lo[k], b_hi[k], n_axis + 1) for k in range(n)]
        Y = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        Y = Y[np.linalg.norm(Y - center, axis=1) <= R * (1 + 1e-12)]
        if len(Y) == 0:
            Y = c_clip[None, :]
        f = obj.many(Y)
        spacing = float(np.max(b_hi - b_lo)) / n_axis
        order = np.argsort(f)
        seeds = []
        for i in order:
            if not np.isfinite(f[i]) or len(seeds) >= 4:
                break
            if all(np.linalg.norm(Y[i] - Y[j]) > 2 * spacing for j in seeds):
                seeds.append(i)
        for i in seeds:
            def fun(y):
                return obj.one(_project(y, center, R, lo, hi))

            simplex = np.vstack([Y[i]] + [Y[i] + 0.5 * spacing * e for e in np.eye(n)])
            res = optimize.minimize(fun, Y[i], method="Nelder-Mead",
                                    options={"initial_simplex": simplex, "xatol": 1e-10,
                                             "fatol": 1e-14, "maxiter": 4000 * n})
            y_opt = _project(res.x, center, R, lo, hi)
            f_opt = obj.one(y_opt)
            if f[i] < f_opt:
                y_opt, f_opt = Y[i].copy(), float(f[i])
            refined.append((y_opt, f_opt))

    if not refined:
        raise EikonalError(f"no causally related surface point found from {x}")
    refined.sort(key=lambda item: item[1])
    best = refined[0][1]
    kept = []
    for y, fy in refined:
        if fy <= best + tol.tol_cluster and all(np.linalg.norm(y - z) > 1e-5 for z, _ in kept):
            kept.append((y, fy))
    events = [surface.event(y) for y, _ in kept]
    dists = [float(obj.distances(y[None, :])[0]) for y, _ in kept]
    y0 = kept[0][0]
    on_edge = np.linalg.norm(y0 - center) >= R - tol.tol_cone
    status = Status.BOUNDARY_MIN if on_edge or dists[0] <= tol.tol_dist else Status.INTERIOR_MIN
    return SolveResult(x, float(best), events, dists, status, region, side, evaluations=obj.count)


def solve_at(st, surface, x, *, tol=DEFAULT, n_scan=N_SCAN, grid_resolution=None):
    """Evaluate the variational solution at an event ``x`` in the past of ``surface``.

    A coarse scan of the footprint on ``n_scan`` points per spatial axis
    seeds local refinement (bounded golden-section/parabolic search in one
    spatial dimension, Nelder-Mead on the projected ball otherwise).  Every
    refined minimizer within ``tol_cluster`` of the best value is reported.

    With ``grid_resolution`` set, a footprint smaller than
    ``2 / n_scan * grid_resolution`` is reported as ``Status.DEGENERATE`` and
    takes the datum at its center.
    """
    x = np.asarray(x, float)
    if x[0] >= surface.level:
        raise NotInPast(f"event {x} is not in the past of t = {surface.level}")
    return _minimize(st, surface, x, "past", tol, n_scan, grid_resolution)


def solve_future_side(st, surface, x, *, tol=DEFAULT, n_scan=N_SCAN, grid_resolution=None):
    """Mirror formula for events after the surface: ``inf_{y <= x} phi(y) - d(y, x)``.

    This matches the datum on the surface and is the time reflection of
    :func:`solve_at`.
    """
    x = np.asarray(x, float)
    if x[0] <= surface.level:
        raise NotInFuture(f"event {x} is not in the future of t = {surface.level}")
    return _minimize(st, surface, x, "future", tol, n_scan, grid_resolution)


# calibrated rays ----------------------------------------------------------------

def calibrated_ray(st, surface, result, x=None, *, n_samples=41, tol=DEFAULT):
    """Unit-speed maximal geodesic from ``x`` to its (first) minimizer.

    Parameters run over proper time ``[0, d(x, y_x)]``.
    """
    x = np.asarray(result.point if x is None else x, float)
    if result.side != "past":
        raise ValueError("calibrated rays start from events in the past of the surface")
    d = result.distances[0]
    if d <= tol.tol_dist:
        raise NullMinimizer(f"minimizer of {x} is null related (d = {d:.3e})")
    y = result.minimizers[0]
    if st.is_flat:
        s = np.linspace(0.0, d, n_samples)
        u = (y - x) / d
        ray = Geodesic(s, x + s[:, None] * u, np.tile(u, (n_samples, 1)), "proper-time",
                       initial_point=x, initial_velocity=u, step=d / (n_samples - 1), length=d)
    else:
        geo = connect_maximal_geodesic(st, x, y, tol=tol, n_samples=n_samples)
        if geo is None:
            raise NullMinimizer(f"minimizer of {x} is not chronologically related")
        ray = reparametrize_proper_time(st, geo)
        ray.length = geo.length
    result.calibrated = ray
    return ray


def calibration_defect(st, surface, result, ray=None, *, n_check=11, tol=DEFAULT, solver=None):
    """``max_t |u(ray(t)) - u(x) - t|`` over ``n_check`` sampled proper times.

    The last sample is the surface point itself, where ``u`` equals the datum.
    """
    ray = ray if ray is not None else (result.calibrated or calibrated_ray(st, surface, result, tol=tol))
    solver = solver or (lambda p: solve_at(st, surface, p, tol=tol).value)
    ts = np.linspace(0.0, ray.params[-1], n_check)
    worst = 0.0
    for t in ts:
        if st.is_flat or t <= 0:
            p = np.array([np.interp(t, ray.params, ray.points[:, k]) for k in range(st.dim)])
        else:
            p = _ray_point(st, ray, t)
        if t >= ray.params[-1]:
            u = float(surface.datum(ray.points[-1][1:][None, :])[0])
        else:
            u = solver(p)
        worst = max(worst, abs(u - result.value - t))
    return worst


def _ray_point(st, ray, t):
    # re-integrate to proper time t instead of interpolating samples
    V = ray.tangents[0] * t
    n = max(8, 2 * (len(ray.params) - 1))
    return _flow(st, ray.points[0], V, n)[0]


# upper support --------------------------------------------------------------------

@dataclass
class UpperSupport:
    """``z -> phi(y_x) - d(z, p) - d(p, y_x)``, a smooth function above ``u`` touching it at ``x``.

    ``p`` is the waypoint at fraction ``p_frac`` of the calibrated ray from
    ``x``.  Outside the chronological past of ``p`` the value is ``+inf``.
    """

    st: object
    base: np.ndarray
    waypoint: np.ndarray
    minimizer: np.ndarray
    phi_min: float
    tail: float
    p_frac: float
    _dist: object = field(default=None, repr=False)

    def __call__(self, z):
        z = np.asarray(z, float)
        if self.st.is_flat:
            d = flat_distance_to(z, self.waypoint)
            dt = self.waypoint[0] - z[..., 0]
            r = np.linalg.norm(self.waypoint[1:] - z[..., 1:], axis=-1)
            out = np.where(dt - r > 0, self.phi_min - d - self.tail, np.inf)
            return out if out.ndim else float(out)
        if z.ndim > 1:
            return np.array([self(zz) for zz in z.reshape(-1, self.st.dim)]).reshape(z.shape[:-1])
        if relation(self.st, z, self.waypoint) is not Relation.CHRONOLOGICAL:
            return np.inf
        return self.phi_min - self._dist(z) - self.tail


def upper_support(st, surface, x, p_frac=0.5, *, result=None, tol=DEFAULT):
    """Upper support function of ``u`` at ``x`` through an interior waypoint of the calibrated ray."""
    if not 0.0 < p_frac < 1.0:
        raise ValueError("p_frac must lie in (0, 1)")
    x = np.asarray(x, float)
    result = result or solve_at(st, surface, x, tol=tol)
    d = result.distances[0]
    if d <= tol.tol_dist:
        raise NullMinimizer(f"minimizer of {x} is null related")
    y = result.minimizers[0]
    phi_y = float(surface.datum(y[1:][None, :])[0])
    if st.is_flat:
        p = x + p_frac * (y - x)
        tail = (1.0 - p_frac) * d
        return UpperSupport(st, x, p, y, phi_y, tail, p_frac)
    geo = connect_maximal_geodesic(st, x, y, tol=tol)
    if geo is None:
        raise NullMinimizer(f"minimizer of {x} is not chronologically related")
    n = max(64, len(geo.params) - 1)
    p = _flow(st, x, geo.initial_velocity * p_frac, n)[0]
    tail = (1.0 - p_frac) * geo.length
    dist = DistanceFrom(st, p, reverse=True, tol=tol)
    return UpperSupport(st, x, p, y, phi_y, tail, p_frac, dist)


# grids and fields -----------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Rectangular lattice given by one coordinate array per axis (time first)."""

    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(np.asarray(a, float) for a in self.axes))

    @classmethod
    def box(cls, t_range, space_ranges, counts, t_open_end=False):
        """Evenly spaced lattice.

        With ``t_open_end`` the time axis samples ``[t0, t1)``: ``counts[0]``
        points with spacing ``(t1 - t0) / counts[0]``.
        """
        counts = list(counts)
        t = np.linspace(t_range[0], t_range[1], counts[0], endpoint=not t_open_end)
        space = [np.linspace(lo, hi, c) for (lo, hi), c in zip(space_ranges, counts[1:])]
        return cls(tuple([t] + space))

    @classmethod
    def from_config(cls, cfg):
        known = {"t", "space", "counts", "t_open_end"}
        if set(cfg) - known:
            from .errors import ConfigError

            raise ConfigError(f"unknown grid keys: {sorted(set(cfg) - known)}")
        return cls.box(cfg["t"], cfg["space"], cfg["counts"], bool(cfg.get("t_open_end", False)))

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def resolution(self):
        return float(min(np.min(np.diff(a)) for a in self.axes if len(a) > 1))

    def points(self):
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids, axis=-1)


@dataclass
class SolutionField:
    """Sampled solution with per-node diagnostics."""

    st: object
    surface: object
    grid: GridSpec
    values: np.ndarray
    minimizers: np.ndarray
    distances: np.ndarray
    status: np.ndarray
    errors: list
    tol: object = DEFAULT

    @property
    def labels(self):
        return self.st.labels

    def __call__(self, x):
        """Exact evaluation through :func:`solve_at` (the datum on the surface)."""
        x = np.asarray(x, float)
        if abs(x[0] - self.surface.level) <= 1e-15:
            return float(self.surface.datum(x[1:][None, :])[0])
        return solve_at(self.st, self.surface, x, tol=self.tol).value

    def contains(self, x, margin=0.0):
        x = np.asarray(x, float)
        lo = np.array([a[0] for a in self.grid.axes])
        hi = np.array([a[-1] for a in self.grid.axes])
        return bool(np.all(x >= lo + margin) and np.all(x <= hi - margin))

    def domain_contains(self, x, margin=0.0):
        """Inside the slab and strictly before the surface (where the field is defined)."""
        x = np.asarray(x, float)
        return bool(self.st.slab.contains(x) and x[0] + margin < self.surface.level)

    def interpolate(self, x):
        interp = RegularGridInterpolator(self.grid.axes, self.values, method="linear")
        return interp(np.asarray(x, float))

    def max_error(self, exact):
        """Largest ``|u - exact(points)|`` over the finite nodes."""
        pts = self.grid.points()
        ref = exact(pts)
        ok = np.isfinite(self.values)
        return float(np.max(np.abs(self.values[ok] - np.asarray(ref)[ok])))

    def summary(self):
        ok = np.isfinite(self.values)
        counts = {s.value: int(np.sum(self.status == s.value)) for s in Status}
        return {
            "shape": list(self.grid.shape),
            "min": float(np.min(self.values[ok])) if ok.any() else None,
            "max": float(np.max(self.values[ok])) if ok.any() else None,
            "status_counts": counts,
            "error_count": len(self.errors),
        }

    def to_csv(self, path):
        pts = self.grid.points().reshape(-1, self.st.dim)
        vals = self.values.ravel()
        mins = self.minimizers.reshape(-1, self.st.dim)
        stat = self.status.ravel()
        labels = list(self.labels)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(labels + ["u"] + [f"min_{lab}" for lab in labels] + ["status"])
            for p, u, m, s in zip(pts, vals, mins, stat):
                w.writerow([f"{c:.17g}" for c in p] + [f"{u:.17g}"] + [f"{c:.17g}" for c in m] + [s])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _solve_rows(args):
    st, surface, points, tol, resolution, n_scan = args
    out = []
    for p in points:
        try:
            r = solve_at(st, surface, p, tol=tol, n_scan=n_scan, grid_resolution=resolution)
            out.append((r.value, r.minimizer, r.distances[0], r.status.value, None))
        except EikonalError as exc:
            out.append((np.nan, np.full(st.dim, np.nan), np.nan, "error", f"{type(exc).__name__}: {exc}"))
    return out


def solve_grid(st, surface, grid, *, tol=DEFAULT, workers=None, n_scan=N_SCAN):
    """Evaluate :func:`solve_at` on every node of ``grid``.

    Node failures are collected in ``field.errors`` and leave ``nan`` values.
    ``workers > 1`` distributes contiguous chunks over processes; the result
    is identical to the sequential run.
    """
    grid = grid if isinstance(grid, GridSpec) else GridSpec(grid)
    if grid.axes[0][-1] >= surface.level:
        raise NotInPast("grid reaches the surface; every node must lie in its past")
    pts = grid.points().reshape(-1, st.dim)
    resolution = grid.resolution
    workers = workers or 1
    if workers > 1 and len(pts) > workers:
        chunks = np.array_split(pts, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_solve_rows, [(st, surface, c, tol, resolution, n_scan) for c in chunks])
            rows = [r for part in parts for r in part]
    else:
        rows = _solve_rows((st, surface, pts, tol, resolution, n_scan))
    shape = grid.shape
    values = np.array([r[0] for r in rows]).reshape(shape)
    mins = np.array([r[1] for r in rows]).reshape(shape + (st.dim,))
    dists = np.array([r[2] for r in rows]).reshape(shape)
    status = np.array([r[3] for r in rows], dtype=object).reshape(shape)
    errors = [(pts[i].tolist(), r[4]) for i, r in enumerate(rows) if r[4] is not None]
    return SolutionField(st, surface, grid, values, mins, dists, status, errors, tol)
