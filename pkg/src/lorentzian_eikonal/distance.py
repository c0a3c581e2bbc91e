"""Lorentzian distance: closed form, geodesic shooting and a longest-path oracle."""

from __future__ import annotations

import csv
import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .causal import Relation, relation
from .errors import GridTooCoarse, NoConvergence, PointOutsideSlab
from .geodesic import (
    Geodesic,
    default_starts,
    geodesic_from_solution,
    orthonormal_frame,
    rapidity_from_velocity,
    shoot,
)
from .spacetime import Kind, metric_field
from .tolerances import DEFAULT


class Backend(enum.Enum):
    ANALYTIC = "analytic"
    SHOOTING = "shooting"
    DAG_ORACLE = "dag_oracle"
    FIRST_INTEGRAL = "first_integral"  # conformally flat: conserved momentum + quadrature
    SEGMENT_BOUND = "segment_bound"  # straight chart segment, a lower bound only


@dataclass
class DistanceResult:
    value: float
    backend: Backend
    realizer: Geodesic | None = None
    error_estimate: float = 0.0


def _check(st, *events):
    out = []
    for e in events:
        e = np.asarray(e, float)
        if not st.slab.contains(e):
            raise PointOutsideSlab(f"event {e} outside the slab")
        out.append(e)
    return out


def flat_distance(x, Y):
    """Closed-form flat distance from ``x`` to each row of ``Y``; zero off the future cone."""
    Y = np.asarray(Y, float)
    d = Y - np.asarray(x, float)
    dt = d[..., 0]
    q = dt * dt - np.sum(d[..., 1:] ** 2, axis=-1)
    return np.where((dt > 0) & (q > 0), np.sqrt(np.maximum(q, 0.0)), 0.0)


def flat_distance_to(X, y):
    """Closed-form flat distance from each row of ``X`` to ``y``."""
    X = np.asarray(X, float)
    d = np.asarray(y, float) - X
    dt = d[..., 0]
    q = dt * dt - np.sum(d[..., 1:] ** 2, axis=-1)
    return np.where((dt > 0) & (q > 0), np.sqrt(np.maximum(q, 0.0)), 0.0)


def lorentz_distance(st, x, y, *, tol=DEFAULT, realizer=False, max_restarts=8):
    """Supremum of Lorentzian lengths of causal curves from ``x`` to ``y``.

    Zero when ``y`` is not in the chronological future of ``x``.  Flat kinds
    use the closed form; other kinds shoot for the maximal geodesic, and
    ``NoConvergence`` propagates so that callers can fall back to the oracle.
    """
    x, y = _check(st, x, y)
    if st.is_flat:
        value = float(flat_distance(x, y))
        geo = None
        if realizer and value > 0:
            geo = _straight_geodesic(x, y)
        return DistanceResult(value, Backend.ANALYTIC, geo)
    if relation(st, x, y, tol) is not Relation.CHRONOLOGICAL:
        return DistanceResult(0.0, Backend.SHOOTING)
    sol = shoot(st, x, y, default_starts(st, x, y, max_restarts), tol=tol)
    geo = geodesic_from_solution(st, x, sol) if realizer else None
    return DistanceResult(sol.T, Backend.SHOOTING, geo, sol.residual)


def _straight_geodesic(x, y, n=33):
    s = np.linspace(0.0, 1.0, n)
    return Geodesic(s, x + s[:, None] * (y - x), np.tile(y - x, (n, 1)), "affine",
                    initial_point=x, initial_velocity=y - x, step=1.0 / (n - 1),
                    length=float(flat_distance(x, y)))


def conformal_distance(st, x, y, n_quad=64):
    """Distance for ``a(t)^2 (-dt^2 + |dx|^2)`` from the conserved spatial momentum.

    Along a unit-speed geodesic ``a^2 dx/ds = p`` is constant, so
    ``dx/dt = p / sqrt(a^2 + |p|^2)`` and ``ds/dt = a^2 / sqrt(a^2 + |p|^2)``.
    The momentum magnitude matching the spatial separation is found by a
    bracketed root search and the length by Gauss-Legendre quadrature.
    Returns ``(distance, momentum)``; zero distance off the chronological future.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    dt = y[0] - x[0]
    dx = y[1:] - x[1:]
    r = float(np.linalg.norm(dx))
    if dt <= 0 or r >= dt:
        return 0.0, np.zeros_like(dx)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    ts = x[0] + 0.5 * dt * (nodes + 1.0)
    w = 0.5 * dt * weights
    a2 = np.broadcast_to(st.conformal_factor.evaluate({st.labels[0]: ts}), ts.shape) ** 2

    def reach(p):
        return float(w @ (p / np.sqrt(a2 + p * p))) - r

    if r == 0.0:
        p = 0.0
    else:
        hi = 1.0
        while reach(hi) < 0:
            hi *= 4.0
            if hi > 1e12:
                return 0.0, np.zeros_like(dx)
        p = optimize.brentq(reach, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=400)
    length = float(w @ (a2 / np.sqrt(a2 + p * p)))
    direction = dx / r if r > 0 else np.zeros_like(dx)
    return length, p * direction


# warm-started evaluation against a fixed anchor ------------------------------------

class DistanceFrom:
    """``y -> d(anchor, y)`` (or ``d(y, anchor)`` with ``reverse=True``) with warm starts.

    Repeated shooting solves against one anchor reuse the nearest previous
    solution as the initial guess, which keeps dense scans affordable on
    curved kinds.  Conformally flat metrics skip shooting altogether
    (:func:`conformal_distance`).  When shooting fails the straight chart segment's length
    is used instead; it never exceeds the true distance.
    """

    def __init__(self, st, anchor, *, reverse=False, tol=DEFAULT):
        self.st = st
        self.anchor = np.asarray(anchor, float)
        self.reverse = reverse
        self.tol = tol
        self._solved = []  # (other endpoint, solution)
        self.fallbacks = 0

    def _pair(self, y):
        return (y, self.anchor) if self.reverse else (self.anchor, y)

    def __call__(self, y):
        return self.result(y).value

    def many(self, Y):
        Y = np.asarray(Y, float)
        if self.st.is_flat:
            return flat_distance_to(Y, self.anchor) if self.reverse else flat_distance(self.anchor, Y)
        return np.array([self(y) for y in Y.reshape(-1, self.st.dim)]).reshape(Y.shape[:-1])

    def result(self, y):
        y = np.asarray(y, float)
        a, b = self._pair(y)
        if self.st.is_flat:
            return DistanceResult(float(flat_distance(a, b)), Backend.ANALYTIC)
        if self.st.kind is Kind.CONFORMALLY_FLAT:
            return DistanceResult(conformal_distance(self.st, a, b)[0], Backend.FIRST_INTEGRAL)
        if relation(self.st, a, b, self.tol) is not Relation.CHRONOLOGICAL:
            return DistanceResult(0.0, Backend.SHOOTING)
        starts = self._starts(a, b, y)
        try:
            sol = shoot(self.st, a, b, starts, tol=self.tol)
        except NoConvergence:
            self.fallbacks += 1
            return DistanceResult(segment_length(self.st, a, b), Backend.SEGMENT_BOUND)
        self._solved.append((y, sol))
        return DistanceResult(sol.T, Backend.SHOOTING, None, sol.residual)

    def solution(self, y):
        """Shooting solution of the last call at ``y`` (for realizers)."""
        y = np.asarray(y, float)
        for z, sol in reversed(self._solved):
            if np.array_equal(z, y):
                return sol
        return None

    def _starts(self, a, b, y):
        starts = []
        if self._solved:
            near = min(self._solved, key=lambda item: float(np.sum((item[0] - y) ** 2)))
            z, sol = near
            if np.array_equal(orthonormal_frame(self.st, a), sol.frame):
                starts.append((sol.T, sol.xi))
            else:
                # frames differ between base points: transport the direction through the chart
                starts.append(rapidity_from_velocity(orthonormal_frame(self.st, a), sol.velocity))
        starts.extend(default_starts(self.st, a, b))
        return starts


def segment_length(st, a, b, n=16):
    """Lorentzian length of the straight chart segment ``a -> b`` (0 if not causal)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    nodes, weights = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (nodes + 1.0)
    pts = a + s[:, None] * (b - a)
    g = metric_field(st, pts)
    d = b - a
    q = np.einsum("i,nij,j->n", d, g, d)
    if np.any(q > 0) or d[0] <= 0:
        return 0.0
    return float(0.5 * weights @ np.sqrt(-q))


# longest-path oracle --------------------------------------------------------------

@dataclass(frozen=True)
class OracleGrid:
    """Resolution of the longest-path oracle.

    ``n_t`` layers in time between the endpoints, arcs reaching up to
    ``stencil`` layers ahead and ``stencil`` lattice steps sideways per
    spatial axis.  ``n_space`` lattice nodes span the widest spatial extent
    of the causal diamond (defaults to ``n_t``).
    """

    n_t: int = 201
    stencil: int = 5
    n_space: int | None = None
    quad_points: int = 3

    def refined(self):
        """Grid with the spacing halved; its node set contains this one's."""
        ns = self.n_space if self.n_space is not None else self.n_t
        return OracleGrid(2 * self.n_t - 1, self.stencil, 2 * ns - 1, self.quad_points)


def distance_oracle_dag(st, x, y, grid=None, *, strict=True, tol=DEFAULT):
    """Longest causal path from ``x`` to ``y`` through a sheared space-time lattice.

    Layer ``i`` holds the events ``x + (i dt, i sigma + j h)`` with ``j`` an
    integer vector, so both endpoints are lattice nodes and the straight
    segment from ``x`` to ``y`` is a lattice path.  Arcs join causally related
    nodes within the stencil and weigh the Lorentzian length of the chart
    segment between them (Gauss-Legendre quadrature).  The result is a lower
    bound for ``d(x, y)`` that increases under :meth:`OracleGrid.refined`.

    Raises ``GridTooCoarse`` (when ``strict``) if no lattice path reaches
    ``y`` although the events are chronologically related.
    """
    grid = grid or OracleGrid()
    x, y = _check(st, x, y)
    dt_total = y[0] - x[0]
    if dt_total <= 0:
        return 0.0
    n_layers = grid.n_t - 1
    n_space = grid.n_space if grid.n_space is not None else grid.n_t
    k = grid.stencil
    n = st.dim - 1
    c_hi = st.light_speed_bounds[1]
    dt = dt_total / n_layers
    sigma = (y[1:] - x[1:]) / n_layers
    half = max(1, (n_space - 1) // 2)
    h = c_hi * dt_total / (2 * half)
    size = 2 * half + 1

    offsets = [(di, np.array(dj)) for di in range(1, k + 1)
               for dj in itertools.product(range(-k, k + 1), repeat=n)]
    nodes, weights = np.polynomial.legendre.leggauss(grid.quad_points)
    s_q = 0.5 * (nodes + 1.0)
    w_q = 0.5 * weights

    axes = np.arange(-half, half + 1)
    J = np.stack(np.meshgrid(*([axes] * n), indexing="ij"), axis=-1)  # (size,)*n + (n,)
    value = np.full((n_layers + 1,) + (size,) * n, -np.inf)
    value[(0,) + (half,) * n] = 0.0

    cone_tol = 1e-12 * max(1.0, dt_total)
    for i in range(n_layers):
        cur = value[i]
        if not np.any(np.isfinite(cur)):
            continue
        base = np.concatenate([
            np.broadcast_to(x[0] + i * dt, J.shape[:-1] + (1,)),
            x[1:] + i * sigma + J * h,
        ], axis=-1)
        for di, dj in offsets:
            if i + di > n_layers:
                continue
            disp = np.concatenate([[di * dt], di * sigma + dj * h])
            w = _arc_weights(st, base, disp, s_q, w_q, cone_tol, c_hi)
            if w is None:
                continue
            src, dst = _shift_slices(dj, size)
            cand = cur[src] + w[src]
            target = value[i + di]
            np.maximum(target[dst], cand, out=target[dst])
    out = float(value[(n_layers,) + (half,) * n])
    if np.isfinite(out):
        return max(out, 0.0)
    if strict and relation(st, x, y, tol) is Relation.CHRONOLOGICAL:
        raise GridTooCoarse("no lattice path reaches the target; refine the oracle grid")
    return 0.0


def _shift_slices(dj, size):
    src, dst = [], []
    for d in dj:
        d = int(d)
        if d >= 0:
            src.append(slice(0, size - d))
            dst.append(slice(d, size))
        else:
            src.append(slice(-d, size))
            dst.append(slice(0, size + d))
    return tuple(src), tuple(dst)


def _arc_weights(st, base, disp, s_q, w_q, cone_tol, c_hi):
    """Lorentz length of the arc ``p -> p + disp`` for every lattice node ``p``.

    Returns ``None`` when the arc is spacelike everywhere; otherwise an array
    with ``-inf`` where it is not causal.
    """
    dt = disp[0]
    r = float(np.linalg.norm(disp[1:]))
    if r > c_hi * dt * (1 + 1e-12) + cone_tol:
        return None
    shape = base.shape[:-1]
    if st.has_flat_cone:
        if r > dt + cone_tol:
            return None
        flat = np.sqrt(max(dt * dt - r * r, 0.0))
        if st.is_flat:
            return np.full(shape, flat)
        # conformal factor depends on t only: one value per layer
        t0 = float(base.reshape(-1, base.shape[-1])[0, 0])
        ts = t0 + s_q * dt
        a = np.broadcast_to(st.conformal_factor.evaluate({st.labels[0]: ts}), ts.shape)
        return np.full(shape, flat * float(w_q @ a))
    pts = base[..., None, :] + s_q[:, None] * disp  # shape + (q, dim)
    g = metric_field(st, pts)
    q = np.einsum("i,...ij,j->...", disp, g, disp)
    causal = np.all(q <= cone_tol * cone_tol, axis=-1)
    if not np.any(causal):
        return None
    length = np.sqrt(np.maximum(-q, 0.0)) @ w_q
    return np.where(causal, length, -np.inf)


def dag_chronological(st, x, y, grid=None):
    """Oracle answer to ``x << y``: a lattice path of positive length exists."""
    return distance_oracle_dag(st, x, y, grid or OracleGrid(n_t=41, stencil=4, n_space=321), strict=False) > 0.0


def write_distance_table_csv(path, rows, labels):
    """Write :func:`distance_table` rows with 17 significant digits."""
    labels = list(labels)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{lab}" for lab in labels] + [f"y_{lab}" for lab in labels] + ["d", "backend"])
        for x, y, d, backend in rows:
            w.writerow([f"{c:.17g}" for c in x] + [f"{c:.17g}" for c in y] + [f"{d:.17g}", backend])


def distance_table(st, pairs, tol=DEFAULT):
    """Rows ``(x, y, d, backend)`` for a list of event pairs."""
    rows = []
    for x, y in pairs:
        r = lorentz_distance(st, x, y, tol=tol)
        rows.append((np.asarray(x, float), np.asarray(y, float), r.value, r.backend.value))
    return rows

