"""Geodesic integration, Lorentzian length and the two-point shooting problem."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .errors import LeftSlab, NoConvergence, NotCausal, StepFailure
from .spacetime import (
    CausalClass,
    classify_vector,
    geodesic_acceleration,
    metric_at,
    metric_field,
)
from .tolerances import DEFAULT

PARAMETRIZATIONS = ("affine", "h-arclength", "proper-time")


@dataclass
class Curve:
    """Sampled curve: ``points[i]`` at parameter ``params[i]`` with tangent ``tangents[i]``."""

    params: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    parametrization: str = "affine"

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.tangents = np.atleast_2d(np.asarray(self.tangents, dtype=float))
        if self.parametrization not in PARAMETRIZATIONS:
            raise ValueError(f"unknown parametrization {self.parametrization!r}")
        if len(self.params) != len(self.points) or len(self.points) != len(self.tangents):
            raise ValueError("params, points and tangents must have the same length")
        if len(self.params) > 1 and np.any(np.diff(self.params) <= 0):
            raise ValueError("curve parameters must be strictly increasing")

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    def split(self, index):
        """The two sub-curves sharing sample ``index``."""
        a = Curve(self.params[: index + 1], self.points[: index + 1], self.tangents[: index + 1],
                  self.parametrization)
        b = Curve(self.params[index:], self.points[index:], self.tangents[index:], self.parametrization)
        return a, b

    def to_csv(self, path, labels):
        write_curve_csv(path, self, labels)


@dataclass
class Geodesic(Curve):
    initial_point: np.ndarray = None
    initial_velocity: np.ndarray = None
    step: float = float("nan")
    error_estimate: float = 0.0
    length: float = float("nan")  # proper length when known from the construction

    def causal_classes(self, st):
        return [classify_vector(st, p, v) for p, v in zip(self.points, self.tangents)]


@dataclass(frozen=True)
class Stop:
    """Stopping rule for :func:`integrate_geodesic`."""

    kind: str
    value: float = float("nan")

    @classmethod
    def level(cls, s):
        """Stop on the surface ``t = s``."""
        return cls("level", float(s))

    @classmethod
    def proper_time(cls, budget):
        return cls("proper_time", float(budget))

    @classmethod
    def exit(cls):
        """Run until the curve reaches the slab boundary."""
        return cls("exit")


# stepping -------------------------------------------------------------------

def _rk4(st, x, v, h):
    a1 = geodesic_acceleration(st, x, v)
    x2, v2 = x + 0.5 * h * v, v + 0.5 * h * a1
    a2 = geodesic_acceleration(st, x2, v2)
    x3, v3 = x + 0.5 * h * v2, v + 0.5 * h * a2
    a3 = geodesic_acceleration(st, x3, v3)
    x4, v4 = x + h * v3, v + h * a3
    a4 = geodesic_acceleration(st, x4, v4)
    xn = x + (h / 6.0) * (v + 2 * v2 + 2 * v3 + v4)
    vn = v + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
    return xn, vn


def richardson_step(st, x, v, h):
    """One step of size ``h`` and its local error estimate.

    Compares a full RK4 step with two half steps; returns the extrapolated
    state and ``|half - full| / 15``.
    """
    xf, vf = _rk4(st, x, v, h)
    xm, vm = _rk4(st, x, v, 0.5 * h)
    xh, vh = _rk4(st, xm, vm, 0.5 * h)
    dx, dv = xh - xf, vh - vf
    err = max(np.max(np.abs(dx)), np.max(np.abs(dv))) / 15.0
    return xh + dx / 15.0, vh + dv / 15.0, err


def _bisect_step(st, x, v, h, crossed, tol, max_iter=200):
    """Smallest sub-step in (0, h] where ``crossed(state)`` flips, to ``tol``."""
    lo, hi = 0.0, h
    best = richardson_step(st, x, v, h)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        state = richardson_step(st, x, v, mid)
        c, done = crossed(state[0])
        if done:
            return mid, state
        if c:
            hi, best = mid, state
        else:
            lo = mid
        if hi - lo < 1e-16 * max(1.0, h):
            break
    return hi, best


def integrate_geodesic(st, p, V, stop, *, step=0.05, max_step=0.25, min_step=1e-10,
                       max_steps=200_000, tol=DEFAULT):
    """Integrate the geodesic through ``p`` with initial velocity ``V``.

    Fixed-form RK4 with Richardson error control: a step is halved until its
    local error is below ``tol_ode`` per unit Euclidean arclength, and grown
    again when the error is far below that.  Level crossings and slab exits
    are located by bisection on the final step.

    Raises
    ------
    LeftSlab
        the curve leaves the slab before the stopping rule triggers.
    StepFailure
        the step size underflows ``min_step``.
    """
    x = np.array(p, dtype=float)
    v = np.array(V, dtype=float)
    if not st.slab.contains(x):
        raise LeftSlab(f"start {x} outside slab")
    if not np.any(v):
        raise ValueError("initial velocity must be nonzero")
    lower, upper = st.slab.lower, st.slab.upper

    lam_end = np.inf
    if stop.kind == "proper_time":
        q = float(v @ metric_at(st, x) @ v)
        if q >= 0:
            raise ValueError("a proper-time budget needs a timelike initial velocity")
        lam_end = stop.value / np.sqrt(-q)
    elif stop.kind == "level":
        if stop.value > upper[0] + tol.tol_hit or stop.value < lower[0] - tol.tol_hit:
            raise LeftSlab(f"level {stop.value} is outside the slab")
        if abs(x[0] - stop.value) <= tol.tol_hit:
            return _make_geodesic([0.0], [x], [v], x, v, step, 0.0)
    elif stop.kind != "exit":
        raise ValueError(f"unknown stopping rule {stop.kind!r}")

    def outside(xn):
        return bool(np.any(xn < lower) or np.any(xn > upper))

    lams, xs, vs = [0.0], [x.copy()], [v.copy()]
    lam, h, err_total = 0.0, float(step), 0.0
    for _ in range(max_steps):
        last = lam + h >= lam_end
        h_try = lam_end - lam if last else h
        xn, vn, err = richardson_step(st, x, v, h_try)
        allowed = tol.tol_ode * h_try * max(np.linalg.norm(v), 1e-300)
        if err > allowed and h_try > min_step:
            h = 0.5 * h_try
            if h < min_step:
                raise StepFailure(f"step size underflow at parameter {lam}")
            continue
        if stop.kind == "level" and xn[0] >= stop.value:
            target = stop.value

            def crossed(xm):
                return xm[0] >= target, abs(xm[0] - target) <= tol.tol_hit

            h_hit, (xn, vn, err) = _bisect_step(st, x, v, h_try, crossed, tol.tol_hit)
            xn[0] = target if abs(xn[0] - target) <= tol.tol_hit else xn[0]
            lams.append(lam + h_hit)
            xs.append(xn)
            vs.append(vn)
            err_total += err
            break
        if outside(xn):
            if stop.kind != "exit":
                raise LeftSlab(f"geodesic left the slab near {xn}")

            def crossed(xm):
                return outside(xm), False

            h_hit, (xn, vn, err) = _bisect_step(st, x, v, h_try, crossed, tol.tol_hit, max_iter=60)
            lams.append(lam + h_hit)
            xs.append(np.clip(xn, lower, upper))
            vs.append(vn)
            err_total += err
            break
        lam += h_try
        x, v = xn, vn
        lams.append(lam)
        xs.append(x)
        vs.append(v)
        err_total += err
        if last:
            break
        if err < allowed / 64.0:
            h = min(2.0 * h, max_step)
    else:
        raise StepFailure("maximum number of steps exceeded")
    return _make_geodesic(lams, xs, vs, np.asarray(p, float), np.asarray(V, float), h, err_total)


def _make_geodesic(lams, xs, vs, p, V, h, err):
    return Geodesic(np.array(lams), np.array(xs), np.array(vs), "affine",
                    initial_point=np.array(p, float), initial_velocity=np.array(V, float),
                    step=float(h), error_estimate=float(err))


def reparametrize_proper_time(st, geo):
    """Rescale a timelike affine geodesic to unit Lorentzian speed."""
    q = float(geo.tangents[0] @ metric_at(st, geo.points[0]) @ geo.tangents[0])
    if q >= 0:
        raise NotCausal("only timelike geodesics have a proper-time parametrization")
    speed = np.sqrt(-q)
    out = replace(geo, params=(geo.params - geo.params[0]) * speed, tangents=geo.tangents / speed,
                  parametrization="proper-time")
    return out


# length ---------------------------------------------------------------------

def lorentz_length(st, curve, tol=DEFAULT):
    """Lorentzian length ``int sqrt(-g(c', c'))`` by composite quadrature of the samples."""
    g = metric_field(st, curve.points)
    q = np.einsum("ni,nij,nj->n", curve.tangents, g, curve.tangents)
    scale = np.einsum("ni,ni->n", curve.tangents, curve.tangents)
    if np.any(q > tol.tol_class * np.maximum(scale, 1e-300)):
        raise NotCausal("curve has spacelike tangents")
    gx = np.einsum("nj,nj->n", g[:, 0, :], curve.tangents)  # g(d/dt, c')
    if np.any((gx >= 0) & (scale > 0)):
        raise NotCausal("curve is not future-directed")
    if len(curve.params) < 2:
        return 0.0
    speed = np.sqrt(np.maximum(-q, 0.0))
    return float(integrate.simpson(speed, x=curve.params))


def straight_segment(st, a, b, n=65):
    """Chart-straight curve from ``a`` to ``b`` with parameter in [0, 1]."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    s = np.linspace(0.0, 1.0, n)
    return Curve(s, a + s[:, None] * (b - a), np.tile(b - a, (n, 1)), "affine")


def write_curve_csv(path, curve, labels):
    labels = list(labels)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s"] + labels + ["d" + lab for lab in labels])
        for s, p, v in zip(curve.params, curve.points, curve.tangents):
            w.writerow([f"{s:.17g}"] + [f"{c:.17g}" for c in p] + [f"{c:.17g}" for c in v])


# shooting ---------------------------------------------------------------------

def orthonormal_frame(st, p):
    """Columns form a g-orthonormal frame at ``p`` with a future timelike first column."""
    g = metric_at(st, p, check=False)
    frame = []
    for i in range(st.dim):
        w = np.zeros(st.dim)
        w[i] = 1.0
        for e in frame:
            w = w - (w @ g @ e) / (e @ g @ e) * e
        frame.append(w / np.sqrt(abs(w @ g @ w)))
    return np.array(frame).T


def velocity_from_rapidity(frame, T, xi):
    """Initial velocity of proper length ``T`` with rapidity vector ``xi``."""
    xi = np.asarray(xi, dtype=float)
    r = float(np.sqrt(xi @ xi))
    shc = np.sinh(r) / r if r > 1e-8 else 1.0 + r * r / 6.0
    coeffs = np.concatenate([[np.cosh(r)], shc * xi])
    return T * (frame @ coeffs)


def rapidity_from_velocity(frame, V):
    c = np.linalg.solve(frame, V)
    c0, cs = c[0], c[1:]
    rs = float(np.linalg.norm(cs))
    if c0 <= rs:
        # outside the future cone in frame components; aim just inside it
        cs = cs * (0.9 * c0 / rs) if rs > 0 and c0 > 0 else np.zeros_like(cs)
        c0 = abs(c0) if c0 != 0 else 1.0
        rs = float(np.linalg.norm(cs))
    T = float(np.sqrt(c0 * c0 - rs * rs))
    xi = np.arctanh(rs / c0) * cs / rs if rs > 0 else np.zeros_like(cs)
    return T, xi


def _flow(st, x, V, n_steps):
    h = 1.0 / n_steps
    v = V
    for _ in range(n_steps):
        x, v = _rk4(st, x, v, h)
    return x, v


def _flow_samples(st, x, V, n_steps):
    h = 1.0 / n_steps
    xs, vs = [x], [V]
    v = V
    for _ in range(n_steps):
        x, v = _rk4(st, x, v, h)
        xs.append(x)
        vs.append(v)
    return np.array(xs), np.array(vs)


@dataclass
class ShootingSolution:
    T: float
    xi: np.ndarray
    n_steps: int
    residual: float
    velocity: np.ndarray
    frame: np.ndarray


def _pick_steps(st, x, V, scale, tol, n=None):
    if st.is_flat:
        return 1
    n = n or 4
    end_n = _flow(st, x, V, n)[0]
    while n < 8192:
        end_2n = _flow(st, x, V, 2 * n)[0]
        if np.max(np.abs(end_2n - end_n)) < 0.1 * tol.tol_bvp * scale:
            return 2 * n
        n, end_n = 2 * n, end_2n
    raise StepFailure("could not resolve the geodesic flow")


def shoot(st, x, y, starts, tol=DEFAULT, n_steps=None):
    """Solve ``exp_x(V) = y`` for a future timelike ``V``, trying each start in turn.

    ``starts`` is a sequence of ``(T, xi)`` guesses.  Returns the converged
    solution with the largest proper length, or raises ``NoConvergence``.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    frame = orthonormal_frame(st, x)
    scale = max(1.0, float(np.max(np.abs(y - x))))
    best = None
    for k, (T0, xi0) in enumerate(starts):
        z0 = np.concatenate([[np.log(max(T0, 1e-12))], np.asarray(xi0, float)])
        n = n_steps or _pick_steps(st, x, velocity_from_rapidity(frame, T0, xi0), scale, tol)

        def F(z, n=n):
            if not np.all(np.isfinite(z)) or abs(z[0]) > 50 or np.any(np.abs(z[1:]) > 30):
                return np.full(st.dim, 1e6)
            with np.errstate(all="ignore"):
                V = velocity_from_rapidity(frame, np.exp(z[0]), z[1:])
                out = (_flow(st, x, V, n)[0] - y) / scale
            return out if np.all(np.isfinite(out)) else np.full(st.dim, 1e6)

        for _ in range(4):
            try:
                sol = optimize.root(F, z0, method="hybr", options={"xtol": 1e-14, "maxfev": 400})
            except (FloatingPointError, ValueError, OverflowError):
                break
            z = sol.x
            res = float(np.max(np.abs(F(z)))) * scale
            if not np.isfinite(res) or res > tol.tol_bvp:
                break
            V = velocity_from_rapidity(frame, np.exp(z[0]), z[1:])
            if n > 1:
                # Richardson-style check of the fixed-step flow
                check = np.max(np.abs(_flow(st, x, V, 2 * n)[0] - y))
                if check > tol.tol_bvp:
                    n, z0 = 2 * n, z
                    continue
            cand = ShootingSolution(float(np.exp(z[0])), z[1:].copy(), n, res, V, frame)
            if best is None or cand.T > best.T:
                best = cand
            break
        if best is not None and k == 0:
            break  # first start converged: the maximizer is unique off the cut locus
    if best is None:
        raise NoConvergence(f"shooting from {x} to {y} did not converge")
    return best


def default_starts(st, x, y, restarts=8):
    frame = orthonormal_frame(st, x)
    T0, xi0 = rapidity_from_velocity(frame, np.asarray(y, float) - np.asarray(x, float))
    starts = [(T0, xi0)]
    n = st.dim - 1
    if n == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        rng = np.random.default_rng(12345)
        d = rng.normal(size=(restarts, n))
        dirs = list(d / np.linalg.norm(d, axis=1, keepdims=True))
    for k in range(restarts):
        u = dirs[k % len(dirs)]
        mag = 0.1 * (1 + k // len(dirs))
        starts.append((T0 * (1.0 + 0.05 * ((k % 3) - 1)), xi0 + mag * u))
    return starts


def connect_maximal_geodesic(st, x, y, *, tol=DEFAULT, max_restarts=8, n_samples=None):
    """Maximal future-directed geodesic from ``x`` to ``y``, or ``None``.

    Pairs that are not chronologically related (including pairs on each
    other's light cone, whose only connecting curves have zero length)
    return ``None``.  Failure of the shooting iteration raises
    ``NoConvergence``.
    """
    from .causal import Relation, relation

    if relation(st, x, y, tol=tol) is not Relation.CHRONOLOGICAL:
        return None
    sol = shoot(st, x, y, default_starts(st, x, y, max_restarts), tol=tol)
    return geodesic_from_solution(st, x, sol, n_samples)


def geodesic_from_solution(st, x, sol, n_samples=None):
    n = sol.n_steps
    if n_samples is not None and n_samples - 1 > n:
        n = int(np.ceil((n_samples - 1) / n)) * n
    if n == 1:
        n = max(1, (n_samples or 33) - 1)
    xs, vs = _flow_samples(st, np.asarray(x, float), sol.velocity, n)
    lams = np.linspace(0.0, 1.0, n + 1)
    return Geodesic(lams, xs, vs, "affine", initial_point=np.asarray(x, float),
                    initial_velocity=sol.velocity, step=1.0 / sol.n_steps,
                    error_estimate=sol.residual, length=sol.T)


def is_future_causal(cls):
    return cls in (CausalClass.TIMELIKE_FUTURE, CausalClass.LIGHTLIKE_FUTURE)
