"""Sampled certificates for viscosity, orientation, semiconcavity, achronality and stability.

A *field* is anything callable on a single event and returning a float:
a :class:`~lorentzian_eikonal.lax_oleinik.SolutionField`, a closed form, or a
wrapped solver.  Passes are probabilistic certificates; reported violations
carry the witness needed to reproduce them.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull, QhullError

from .causal import InitialDatum, Relation, relation
from .errors import (
    AllProbesNonDifferentiable,
    DomainEdge,
    EmptyLevelSet,
    MultipleRoots,
    NonDifferentiable,
    NonNegativeC,
    NonpositiveArclength,
)
from .lax_oleinik import SolutionField, solve_at, solve_grid
from .spacetime import Spacetime, classify_vector, inverse_metric_at, metric_at
from .tolerances import DEFAULT

FD_STEP = 1e-4
GRADIENT_CLUSTER_TOL = 1e-3


# gradients ------------------------------------------------------------------------

def _domain_check(st, fld, x, step, domain):
    if domain is not None:
        inside = domain(x, step)
    elif isinstance(fld, SolutionField):
        inside = fld.domain_contains(x, margin=step)
    else:
        lo, hi = st.slab.lower, st.slab.upper
        inside = bool(np.all(x - step >= lo) and np.all(x + step <= hi))
    if not inside:
        raise DomainEdge(f"the {step:g}-ball around {x} leaves the field domain")


def differential(st, fld, x, step=FD_STEP, *, tol=DEFAULT, domain=None):
    """Central-difference differential ``du`` at ``x``, or ``None`` at a kink."""
    x = np.asarray(x, float)
    _domain_check(st, fld, x, step, domain)
    f0 = float(fld(x))
    du = np.empty(st.dim)
    for k in range(st.dim):
        e = np.zeros(st.dim)
        e[k] = step
        fp, fm = float(fld(x + e)), float(fld(x - e))
        if abs((fp - f0) / step - (f0 - fm) / step) > tol.tol_kink:
            return None
        du[k] = (fp - fm) / (2 * step)
    return du


def numeric_gradient(st, fld, x, step=FD_STEP, *, tol=DEFAULT, domain=None):
    """Metric gradient ``grad u = g^{-1} du`` by central differences, or ``None`` at a kink.

    Raises ``DomainEdge`` when the difference stencil leaves the field's domain.
    """
    du = differential(st, fld, x, step, tol=tol, domain=domain)
    if du is None:
        return None
    return inverse_metric_at(st, x) @ du


def eikonal_residual(st, fld, x, step=FD_STEP, *, tol=DEFAULT, domain=None):
    """``g(grad u, grad u) + 1`` at ``x``."""
    grad = numeric_gradient(st, fld, x, step, tol=tol, domain=domain)
    if grad is None:
        raise NonDifferentiable(f"field is not differentiable at {np.asarray(x, float)}")
    return float(grad @ metric_at(st, x) @ grad + 1.0)


@dataclass
class GradientProbe:
    """Estimates of the reachable, super- and sub-gradient sets at ``point``.

    ``super`` and ``sub`` are lists of convex-hull vertices; an empty list
    means the set is estimated empty.
    """

    point: np.ndarray
    reachable: list
    super: list
    sub: list
    differentiable: bool
    kink: str = "none"      # "none", "concave", "convex" or "saddle"
    n_probes: int = 0

    def hull_samples(self, which, rng, n_comb=20):
        """Hull vertices followed by ``n_comb`` random convex combinations."""
        verts = self.super if which == "super" else self.sub
        if not verts:
            return []
        V = np.array(verts)
        if len(V) == 1:
            return [V[0]]
        weights = rng.dirichlet(np.ones(len(V)), size=n_comb)
        return list(V) + list(weights @ V)


def _cluster(vectors, radius):
    centers, members = [], []
    for v in vectors:
        for i, c in enumerate(centers):
            if np.linalg.norm(v - c) <= radius:
                members[i].append(v)
                centers[i] = np.mean(members[i], axis=0)
                break
        else:
            centers.append(np.array(v, float))
            members.append([v])
    return centers


def _hull_vertices(points):
    P = np.array(points)
    if len(P) <= 2:
        return [p for p in P]
    try:
        hull = ConvexHull(P)
        return [P[i] for i in hull.vertices]
    except (QhullError, ValueError):
        return [p for p in P]  # degenerate (collinear) sets: keep every point


def _kink_type(st, fld, x, step, tol):
    f0 = float(fld(x))
    curv = []
    for k in range(st.dim):
        e = np.zeros(st.dim)
        e[k] = step
        curv.append((float(fld(x + e)) + float(fld(x - e)) - 2 * f0) / step)
    curv = np.array(curv)
    up, down = np.any(curv > tol.tol_kink), np.any(curv < -tol.tol_kink)
    if up and down:
        return "saddle"
    if up:
        return "convex"
    if down:
        return "concave"
    return "none"


def reachable_gradients(st, fld, x, radius=1e-2, n_probes=24, *, step=None, seed=42,
                        tol=DEFAULT, cluster_tol=GRADIENT_CLUSTER_TOL, domain=None):
    """Estimate ``grad* u(x)`` from gradients at nearby differentiable points.

    Probes sit at random directions on spheres of radii ``radius / 2^k``;
    their gradients are clustered with ``cluster_tol``.  Only the clusters
    found at the two smallest radii are reported, which approximates the
    limit in the definition of reachable gradients.
    """
    x = np.asarray(x, float)
    rng = np.random.default_rng(seed)
    step = step if step is not None else min(FD_STEP, radius / 20)
    grad_x = numeric_gradient(st, fld, x, step, tol=tol, domain=domain)
    if grad_x is not None:
        return GradientProbe(x, [grad_x], [grad_x], [grad_x], True, "none", 1)
    n_levels = 4
    per_level = max(2, n_probes // n_levels)
    by_level = []
    for k in range(n_levels):
        r = radius / 2 ** k
        dirs = rng.normal(size=(per_level, st.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        # make sure the time axis is probed on both sides
        dirs = np.vstack([dirs, np.eye(st.dim)[:1], -np.eye(st.dim)[:1]])
        grads = []
        for u in dirs:
            try:
                g = numeric_gradient(st, fld, x + r * u, min(step, r / 10), tol=tol, domain=domain)
            except DomainEdge:
                continue
            if g is not None:
                grads.append(g)
        by_level.append(grads)
    fine = [g for grads in by_level[-2:] for g in grads]
    if not fine:
        fine = [g for grads in by_level for g in grads]
    if not fine:
        raise AllProbesNonDifferentiable(f"no differentiable probe near {x}")
    reach = _cluster(fine, cluster_tol)
    kink = _kink_type(st, fld, x, step, tol)
    hull = _hull_vertices(reach)
    sup = hull if kink in ("concave",) or len(reach) == 1 else []
    sub = hull if kink in ("convex",) or len(reach) == 1 else []
    return GradientProbe(x, reach, sup, sub, False, kink, sum(len(g) for g in by_level))


# viscosity ------------------------------------------------------------------------

@dataclass
class ViscosityFragment:
    point: np.ndarray
    subsolution: bool
    supersolution: bool
    sub_vacuous: bool
    super_vacuous: bool
    witnesses: list = field(default_factory=list)   # (test, vector, g(V, V))
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return self.subsolution and self.supersolution


def viscosity_check(st, fld, x, probe=None, *, seed=42, n_comb=20, tol=DEFAULT, domain=None):
    """Sampled viscosity inequalities at ``x``.

    Subsolution: ``g(V, V) <= -1 + tol_visc`` on the super-gradient hull.
    Supersolution: ``g(V, V) >= -1 - tol_visc`` on the sub-gradient hull.
    An empty set passes vacuously and is flagged as such.
    """
    x = np.asarray(x, float)
    rng = np.random.default_rng(seed)
    probe = probe or reachable_gradients(st, fld, x, seed=seed, tol=tol, domain=domain)
    g = metric_at(st, x)
    frag = ViscosityFragment(x, True, True, not probe.super, not probe.sub)
    for V in probe.hull_samples("super", rng, n_comb):
        q = float(V @ g @ V)
        frag.witnesses.append(("sub", V, q))
        if q > -1.0 + tol.tol_visc:
            frag.subsolution = False
            frag.violations.append({"test": "subsolution", "point": x.tolist(), "V": V.tolist(), "gVV": q})
    for V in probe.hull_samples("sub", rng, n_comb):
        q = float(V @ g @ V)
        frag.witnesses.append(("super", V, q))
        if q < -1.0 - tol.tol_visc:
            frag.supersolution = False
            frag.violations.append({"test": "supersolution", "point": x.tolist(), "V": V.tolist(), "gVV": q})
    return frag


# time orientation -----------------------------------------------------------------

class Orientation(enum.Enum):
    PAST_CONSISTENT = "PastConsistent"
    FUTURE_CONSISTENT = "FutureConsistent"
    MIXED = "Mixed"


@dataclass
class OrientationVerdict:
    orientation: Orientation
    locations: list              # events where the orientation changes
    n_past: int
    n_future: int
    n_other: int                 # probes whose gradients are not timelike

    def as_dict(self):
        return {"orientation": self.orientation.value, "locations": [list(map(float, p)) for p in self.locations],
                "n_past": self.n_past, "n_future": self.n_future, "n_other": self.n_other}


def _point_orientation(st, fld, x, tol, domain, seed):
    """Set of labels among {"past", "future", "other"} of the reachable gradients at ``x``."""
    try:
        probe = reachable_gradients(st, fld, x, seed=seed, tol=tol, domain=domain)
    except (AllProbesNonDifferentiable, DomainEdge):
        return set()
    labels = set()
    for V in probe.reachable:
        c = classify_vector(st, x, V, tol)
        if c.is_timelike and c.is_past:
            labels.add("past")
        elif c.is_timelike and c.is_future:
            labels.add("future")
        else:
            labels.add("other")
    return labels


def time_orientation(st, fld, points, *, tol=DEFAULT, domain=None, seed=42, locate_tol=1e-6):
    """Classify the orientation of the gradients of ``fld`` over sample ``points``.

    Points carrying both past and future reachable gradients are change
    locations.  When the region holds past-only and future-only points, the
    change is located by bisection along segments joining such pairs.
    """
    pts = np.asarray(points, float).reshape(-1, st.dim)
    labels = [_point_orientation(st, fld, p, tol, domain, seed) for p in pts]
    locations = [p for p, lab in zip(pts, labels) if {"past", "future"} <= lab]
    past_idx = [i for i, lab in enumerate(labels) if lab == {"past"}]
    fut_idx = [i for i, lab in enumerate(labels) if lab == {"future"}]
    n_other = sum(1 for lab in labels if "other" in lab)
    if past_idx and fut_idx:
        # bisect between the nearest opposite pairs
        for i in past_idx:
            j = min(fut_idx, key=lambda j: np.linalg.norm(pts[j] - pts[i]))
            if np.linalg.norm(pts[j] - pts[i]) > 3 * _typical_spacing(pts):
                continue
            loc = _bisect_orientation(st, fld, pts[i], pts[j], tol, domain, seed, locate_tol)
            if loc is not None and not any(np.linalg.norm(loc - q) < 10 * locate_tol for q in locations):
                locations.append(loc)
    n_past = sum(1 for lab in labels if "past" in lab)
    n_future = sum(1 for lab in labels if "future" in lab)
    if locations or (n_past and n_future):
        verdict = Orientation.MIXED
    elif n_future and not n_past:
        verdict = Orientation.FUTURE_CONSISTENT
    elif n_past and not n_future:
        verdict = Orientation.PAST_CONSISTENT
    else:
        verdict = Orientation.MIXED
    if n_other and verdict is not Orientation.MIXED:
        verdict = Orientation.MIXED
        locations.extend(p for p, lab in zip(pts, labels) if "other" in lab)
    return OrientationVerdict(verdict, locations, n_past, n_future, n_other)


def _typical_spacing(pts):
    if len(pts) < 2:
        return np.inf
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return float(np.max(np.min(d, axis=1)))


def _bisect_orientation(st, fld, a, b, tol, domain, seed, locate_tol):
    lab_a = "past"
    for _ in range(60):
        if np.linalg.norm(b - a) <= locate_tol:
            break
        m = 0.5 * (a + b)
        lab = _point_orientation(st, fld, m, tol, domain, seed)
        if lab == {lab_a}:
            a = m
        elif lab and lab_a not in lab:
            b = m
        else:
            return m  # both orientations meet here
    return 0.5 * (a + b)


# semiconcavity --------------------------------------------------------------------

@dataclass
class SemiconcavityResult:
    passed: bool
    margin: float        # largest violation (> 0 fails)
    worst_t: float
    C: float


def semiconcavity_check(fld, a, b, C, *, n_t=9, kind="semiconcave", atol=1e-9):
    """Check the quadratic modulus inequality along the chart segment ``a -> b``.

    Semiconcave: ``u(c(t)) >= (1-t) u(a) + t u(b) - C t (1-t)/2 |b - a|^2``.
    Semiconvex reverses the inequality and the sign of the penalty.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    L2 = float((b - a) @ (b - a))
    fa, fb = float(fld(a)), float(fld(b))
    worst, worst_t = -np.inf, float("nan")
    for t in np.linspace(0.0, 1.0, n_t + 2)[1:-1]:
        ft = float(fld(a + t * (b - a)))
        chord = (1 - t) * fa + t * fb
        pen = C * t * (1 - t) / 2 * L2
        gap = (chord - pen - ft) if kind == "semiconcave" else (ft - chord - pen)
        if gap > worst:
            worst, worst_t = gap, float(t)
    return SemiconcavityResult(worst <= atol, float(worst), worst_t, float(C))


def empirical_semiconcavity_constant(fld, segments, *, n_t=9):
    """Smallest ``C`` for which every segment passes the semiconcave inequality."""
    C = 0.0
    for a, b in segments:
        a, b = np.asarray(a, float), np.asarray(b, float)
        L2 = float((b - a) @ (b - a))
        fa, fb = float(fld(a)), float(fld(b))
        for t in np.linspace(0.0, 1.0, n_t + 2)[1:-1]:
            gap = (1 - t) * fa + t * fb - float(fld(a + t * (b - a)))
            C = max(C, 2.0 * gap / (t * (1 - t) * L2))
    return C


def comparison_bound_f_c(c, s):
    """Comparison function bounding the Hessian of the distance from below.

    ``sqrt(c) coth(sqrt(c) s)`` for ``c > 0``, ``1/s`` for ``c = 0`` and
    ``sqrt(-c) cot(sqrt(-c) s)`` for ``c < 0`` and ``s < pi / sqrt(-c)``;
    past that range the flat cap ``sqrt(-c) / pi`` is returned.
    """
    if s <= 0:
        raise NonpositiveArclength(f"arclength must be positive, got {s}")
    if c > 0:
        r = np.sqrt(c)
        return float(r / np.tanh(r * s))
    if c == 0:
        return 1.0 / s
    r = np.sqrt(-c)
    if s < np.pi / r:
        return float(r / np.tan(r * s))
    return float(r / np.pi)


def predicted_semiconcavity_constant(st, surface, points, *, p_frac=0.5, c=0.0, tol=DEFAULT):
    """Semiconcavity constant implied by the upper supports at ``points``.

    At each base point the support ``z -> phi(y) - d(z, p) - d(p, y)`` has
    Euclidean Hessian at most ``f_c(l) * lambda`` with ``l = d(x, p)`` and
    ``lambda`` the largest Euclidean eigenvalue of ``g + (g u)(g u)^T`` for
    the unit ray tangent ``u``.  Returns the largest value over the points.
    """
    best = 0.0
    for x in np.asarray(points, float).reshape(-1, st.dim):
        r = solve_at(st, surface, x, tol=tol)
        d = r.distances[0]
        if d <= tol.tol_dist:
            return np.inf
        y = r.minimizers[0]
        if st.is_flat:
            u = (y - x) / d
        else:
            from .lax_oleinik import calibrated_ray

            u = calibrated_ray(st, surface, r, tol=tol).tangents[0]
        g = metric_at(st, x)
        gu = g @ u
        lam = float(np.max(np.linalg.eigvalsh(g + np.outer(gu, gu))))
        best = max(best, comparison_bound_f_c(c, p_frac * d) * lam)
    return best


# level sets -----------------------------------------------------------------------

@dataclass
class AchronalityResult:
    passed: bool
    points: np.ndarray
    violations: list
    n_pairs: int


def level_set_points(fld, level, t_axis, spatial_points):
    """Events where ``fld = level``, one per spatial column, by root finding in time.

    ``fld`` is any callable on events (a SolutionField evaluates exactly).
    Each column is scanned over ``t_axis`` and the sign change refined with
    brentq.  :func:`field_level_set` reads the sampled grid instead.
    """
    t_axis = np.asarray(t_axis, float)
    out = []
    for q in np.asarray(spatial_points, float).reshape(len(spatial_points), -1):
        ev = np.array([np.concatenate([[t], q]) for t in t_axis])
        vals = np.array([float(fld(e)) for e in ev]) - level
        out.extend(_column_roots(fld, level, t_axis, q, vals))
    if not out:
        raise EmptyLevelSet(f"level {level} not attained on the sampled columns")
    return np.array(out)


def _column_roots(fld, level, t_axis, q, vals):
    s = np.sign(vals)
    changes = np.nonzero(s[:-1] * s[1:] < 0)[0]
    zeros = np.nonzero(s == 0)[0]
    if len(changes) + len(zeros) > 1:
        raise MultipleRoots(f"level set is not a graph over the column {q}")
    if len(zeros):
        return [np.concatenate([[t_axis[zeros[0]]], q])]
    if not len(changes):
        return []
    i = changes[0]

    def h(t):
        return float(fld(np.concatenate([[t], q]))) - level

    t = optimize.brentq(h, t_axis[i], t_axis[i + 1], xtol=1e-13)
    return [np.concatenate([[t], q])]


def field_level_set(fld: SolutionField, level):
    """Level set of a sampled field from its grid columns (linear interpolation in time)."""
    t = fld.grid.axes[0]
    spatial = np.stack(np.meshgrid(*fld.grid.axes[1:], indexing="ij"), axis=-1).reshape(-1, fld.st.dim - 1)
    cols = fld.values.reshape(len(t), -1) - level
    out = []
    for k, q in enumerate(spatial):
        v = cols[:, k]
        s = np.sign(v)
        changes = np.nonzero(s[:-1] * s[1:] < 0)[0]
        zeros = np.nonzero(s == 0)[0]
        if len(changes) + len(zeros) > 1:
            raise MultipleRoots(f"level set is not a graph over the column {q}")
        if len(zeros):
            out.append(np.concatenate([[t[zeros[0]]], q]))
        elif len(changes):
            i = changes[0]
            w = v[i] / (v[i] - v[i + 1])
            out.append(np.concatenate([[t[i] + w * (t[i + 1] - t[i])], q]))
    if not out:
        raise EmptyLevelSet(f"level {level} is not attained on the grid")
    return np.array(out)


def achronality_of_points(st, points, n_pairs=200, *, seed=42, tol=DEFAULT):
    """Random distinct pairs of ``points`` must be causally unrelated in both orders."""
    pts = np.asarray(points, float)
    rng = np.random.default_rng(seed)
    violations = []
    if len(pts) < 2:
        return AchronalityResult(True, pts, [], 0)
    done = 0
    for _ in range(n_pairs):
        i, j = rng.choice(len(pts), size=2, replace=False)
        p, q = pts[i], pts[j]
        if np.allclose(p, q, atol=1e-12):
            continue
        done += 1
        for a, b in ((p, q), (q, p)):
            rel = relation(st, a, b, tol)
            if rel is not Relation.UNRELATED:
                violations.append({"from": a.tolist(), "to": b.tolist(), "relation": rel.value})
    return AchronalityResult(not violations, pts, violations, done)


def level_set_achronality(st, fld, level, n_pairs=200, *, seed=42, tol=DEFAULT,
                          t_axis=None, spatial_points=None):
    """Extract ``{u = level}`` and check that it is achronal on random pairs."""
    if isinstance(fld, SolutionField) and t_axis is None:
        pts = field_level_set(fld, level)
    else:
        pts = level_set_points(fld, level, t_axis, spatial_points)
    return achronality_of_points(st, pts, n_pairs, seed=seed, tol=tol)


# stability ------------------------------------------------------------------------

@dataclass
class SequenceRule:
    """Perturbations ``phi_n`` of a datum with a known bound on ``sup |phi_n - phi|``."""

    name: str
    make: object            # (phi, n, n_spatial) -> InitialDatum
    bound: object           # n -> sup |phi_n - phi|

    @classmethod
    def sine(cls, amplitude=1.0):
        """``phi_n = phi + (A/n) sin(n y_1)``."""
        def make(phi, n, n_spatial):
            k = np.zeros(n_spatial)
            k[0] = n
            return phi + InitialDatum.sinusoidal(amplitude / n, k)

        return cls("sine", make, lambda n: abs(amplitude) / n)

    @classmethod
    def shift(cls):
        """``phi_n = phi + 1/n``."""
        return cls("shift", lambda phi, n, n_spatial: phi + InitialDatum.constant(1.0 / n), lambda n: 1.0 / n)


@dataclass
class StabilityReport:
    rule: str
    ns: list
    errors: list
    bounds: list
    tol: float

    @property
    def dominated(self):
        return [e <= b + 2 * self.tol for e, b in zip(self.errors, self.bounds)]

    @property
    def strictly_decreasing(self):
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))

    @property
    def passed(self):
        return all(self.dominated) and self.strictly_decreasing

    def as_dict(self):
        return {"rule": self.rule, "ns": self.ns, "errors": self.errors, "bounds": self.bounds,
                "dominated": self.dominated, "strictly_decreasing": self.strictly_decreasing}


def stability_experiment(st, surface, rule, grid, ns=(1, 2, 4, 8, 16), *, tol=DEFAULT, workers=None):
    """Errors ``e_n = max_grid |u_{phi_n} - u_phi|`` against the bounds ``sup |phi_n - phi|``."""
    base = solve_grid(st, surface, grid, tol=tol, workers=workers)
    errors, bounds = [], []
    for n in ns:
        datum = rule.make(surface.datum, n, st.dim - 1)
        fld = solve_grid(st, surface.with_datum(datum), grid, tol=tol, workers=workers)
        errors.append(float(np.nanmax(np.abs(fld.values - base.values))))
        bounds.append(float(rule.bound(n)))
    return StabilityReport(rule.name, list(ns), errors, bounds, tol.tol_solve)


# counterexample family ------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleField:
    """``u_c(x, y) = |x - c| + c`` on the plane with metric ``dy^2 - dx^2`` (``x`` temporal).

    It vanishes on ``{x = 0}`` and is a viscosity solution below it, yet its
    gradient flips from future- to past-directed across ``x = c``.
    """

    c: float
    st: Spacetime

    def __call__(self, p):
        p = np.asarray(p, float)
        return np.abs(p[..., 0] - self.c) + self.c if p.ndim > 1 else float(abs(p[0] - self.c) + self.c)

    def variational(self, p):
        """The variational solution for zero data on ``{x = 0}``: the temporal coordinate."""
        p = np.asarray(p, float)
        return p[..., 0] if p.ndim > 1 else float(p[0])

    def disagreement(self, p):
        """``u_c - u_phi``: ``2 (c - x)`` below the kink, zero above it."""
        p = np.asarray(p, float)
        return self(p) - self.variational(p)


def counterexample_family(c, slab=None):
    if c >= 0:
        raise NonNegativeC(f"the family needs c < 0, got {c}")
    return CounterexampleField(float(c), Spacetime.paper_minkowski_2d(slab))


# audits and reports ---------------------------------------------------------------

@dataclass
class VerificationReport:
    seed: int
    residual_max: float
    residual_mean: float
    n_differentiable: int
    n_probes: int
    orientation: dict
    violations: list
    semiconcavity_constant: float | None = None
    achronality: dict | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2, sort_keys=True, default=float)

    def violations_to_csv(self, path):
        write_violations_csv(path, self.violations)


def write_violations_csv(path, violations):
    """One row per witness: the test, its event, the vector and ``g(V, V)``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "point", "V", "gVV"])
        for v in violations:
            w.writerow([v["test"], " ".join(f"{c:.17g}" for c in v["point"]),
                        " ".join(f"{c:.17g}" for c in v["V"]), f"{v['gVV']:.17g}"])


def verify_field(st, fld, points, *, seed=42, tol=DEFAULT, domain=None, semiconcavity_segments=None):
    """Residual, viscosity and orientation checks over ``points``."""
    pts = np.asarray(points, float).reshape(-1, st.dim)
    residuals, violations = [], []
    for i, p in enumerate(pts):
        try:
            grad = numeric_gradient(st, fld, p, tol=tol, domain=domain)
        except DomainEdge:
            continue
        if grad is not None:
            residuals.append(abs(float(grad @ metric_at(st, p) @ grad) + 1.0))
        frag = viscosity_check(st, fld, p, seed=seed + i, tol=tol, domain=domain)
        violations.extend(frag.violations)
    verdict = time_orientation(st, fld, pts, tol=tol, domain=domain, seed=seed)
    C = None
    if semiconcavity_segments is not None:
        C = empirical_semiconcavity_constant(fld, semiconcavity_segments)
    return VerificationReport(
        seed=seed,
        residual_max=float(np.max(residuals)) if residuals else float("nan"),
        residual_mean=float(np.mean(residuals)) if residuals else float("nan"),
        n_differentiable=len(residuals),
        n_probes=len(pts),
        orientation=verdict.as_dict(),
        violations=violations,
        semiconcavity_constant=C,
    )


@dataclass
class UniquenessAudit:
    viscosity: bool
    boundary_error: float
    orientation: Orientation
    max_disagreement: float
    premises_hold: bool
    consistent: bool       # premises imply agreement, as the uniqueness statement requires
    failed_premises: list

    def as_dict(self):
        d = asdict(self)
        d["orientation"] = self.orientation.value
        return d


def uniqueness_audit(st, surface, candidate, reference, points, boundary_points, *,
                     seed=42, tol=DEFAULT, domain=None):
    """Test whether ``candidate`` meets the uniqueness premises and, if so, equals ``reference``.

    The premises are: sampled viscosity checks pass at ``points``, the
    candidate matches the datum at ``boundary_points`` (spatial coordinates
    on the surface) and its orientation is past-consistent.
    """
    pts = np.asarray(points, float).reshape(-1, st.dim)
    visc = all(viscosity_check(st, candidate, p, seed=seed + i, tol=tol, domain=domain).passed
               for i, p in enumerate(pts))
    B = np.asarray(boundary_points, float).reshape(-1, st.dim - 1)
    bdry = max(abs(float(candidate(surface.event(q))) - float(surface.datum(q[None, :])[0])) for q in B)
    verdict = time_orientation(st, candidate, pts, tol=tol, domain=domain, seed=seed)
    disagreement = max(abs(float(candidate(p)) - float(reference(p))) for p in pts)
    failed = []
    if not visc:
        failed.append("viscosity")
    if bdry > 1e-12:
        failed.append("boundary")
    if verdict.orientation is not Orientation.PAST_CONSISTENT:
        failed.append("past_consistent")
    premises = not failed
    consistent = (disagreement <= 5 * tol.tol_solve) if premises else True
    return UniquenessAudit(visc, bdry, verdict.orientation, disagreement, premises, consistent, failed)


def reflected(fld, sign=1.0):
    """``(t, x) -> sign * fld(-t, x)``."""
    def out(p):
        p = np.array(p, float)
        p[..., 0] = -p[..., 0]
        return sign * fld(p)

    return out


__all__ = [
    "GradientProbe", "Orientation", "OrientationVerdict", "SequenceRule",
    "StabilityReport", "VerificationReport", "achronality_of_points", "comparison_bound_f_c",
    "counterexample_family", "differential", "eikonal_residual", "empirical_semiconcavity_constant",
    "field_level_set", "level_set_achronality", "level_set_points", "numeric_gradient",
    "predicted_semiconcavity_constant", "reachable_gradients", "reflected", "semiconcavity_check",
    "stability_experiment", "time_orientation", "uniqueness_audit", "verify_field", "viscosity_check",
    "write_violations_csv",
]
