"""Catalog of globally hyperbolic product spacetimes.

Every spacetime lives on a chart slab ``[t_min, t_max] x box`` with the
temporal function given by the first coordinate.  Events and tangent
vectors are plain float arrays of length ``dim`` in chart coordinates.

The time orientation is carried by the coordinate field ``X = d/dt``: a
causal vector ``V`` is future-directed when ``g(X, V) < 0`` and
past-directed when ``g(X, V) > 0``.  The auxiliary Riemannian metric is the
Euclidean metric of the chart.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError, PointOutsideSlab, SignatureError, SpacelikeVector
from .expression import Expr, parse_expression
from .tolerances import DEFAULT


class Kind(str, enum.Enum):
    MINKOWSKI = "minkowski"
    PAPER_MINKOWSKI_2D = "paper_minkowski_2d"
    CONFORMALLY_FLAT = "conformally_flat"
    CUSTOM = "custom"


class CausalClass(enum.Enum):
    TIMELIKE_FUTURE = "timelike_future"
    TIMELIKE_PAST = "timelike_past"
    LIGHTLIKE_FUTURE = "lightlike_future"
    LIGHTLIKE_PAST = "lightlike_past"
    SPACELIKE = "spacelike"
    ZERO = "zero"

    @property
    def is_timelike(self):
        return self in (CausalClass.TIMELIKE_FUTURE, CausalClass.TIMELIKE_PAST)

    @property
    def is_causal(self):
        return self not in (CausalClass.SPACELIKE, CausalClass.ZERO)

    @property
    def is_future(self):
        return self in (CausalClass.TIMELIKE_FUTURE, CausalClass.LIGHTLIKE_FUTURE)

    @property
    def is_past(self):
        return self in (CausalClass.TIMELIKE_PAST, CausalClass.LIGHTLIKE_PAST)


_DEFAULT_LABELS = ("t", "x", "y", "z")


@dataclass(frozen=True)
class Slab:
    """Computation domain ``[t_min, t_max] x prod_i [lo_i, hi_i]``."""

    t: tuple
    space: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        space = tuple(tuple(float(v) for v in box) for box in self.space)
        if len(t) != 2 or not t[0] < t[1]:
            raise ConfigError(f"bad temporal bounds {self.t!r}")
        for lo, hi in space:
            if not lo < hi:
                raise ConfigError(f"bad spatial bounds {(lo, hi)!r}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "space", space)

    @property
    def lower(self):
        return np.array([self.t[0]] + [b[0] for b in self.space])

    @property
    def upper(self):
        return np.array([self.t[1]] + [b[1] for b in self.space])

    def contains(self, p, tol=1e-12):
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def spatial_contains(self, q, tol=1e-12):
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower[1:] - tol) and np.all(q <= self.upper[1:] + tol))

    def to_config(self):
        return {"t": list(self.t), "space": [list(b) for b in self.space]}


def default_slab(dim):
    return Slab((-2.0, 2.0), tuple((-4.0, 4.0) for _ in range(dim - 1)))


@dataclass(frozen=True, eq=False)
class Spacetime:
    """Immutable descriptor of a product spacetime on a chart slab.

    Use the constructors :meth:`minkowski`, :meth:`paper_minkowski_2d`,
    :meth:`conformally_flat`, :meth:`custom` or :meth:`from_config`.
    """

    dim: int
    kind: Kind
    labels: tuple
    slab: Slab
    conformal_factor: Expr | None = None
    components: tuple | None = None
    source: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 2 <= self.dim <= 4:
            raise ConfigError(f"dimension must be between 2 and 4, got {self.dim}")
        if len(self.labels) != self.dim or len(self.slab.space) != self.dim - 1:
            raise ConfigError("labels and slab must match the dimension")
        if self.kind is Kind.CONFORMALLY_FLAT:
            ts = np.linspace(self.slab.t[0], self.slab.t[1], 201)
            a = np.broadcast_to(self.conformal_factor.evaluate({self.labels[0]: ts}), ts.shape)
            if not np.all(np.isfinite(a)) or np.any(a <= 0):
                raise SignatureError("conformal factor must be positive on the slab")
        if self.kind is Kind.CUSTOM:
            self._check_signature()

    # constructors ---------------------------------------------------------

    @classmethod
    def minkowski(cls, dim=2, slab=None):
        slab = slab if slab is not None else default_slab(dim)
        return cls(dim, Kind.MINKOWSKI, _DEFAULT_LABELS[:dim], _as_slab(slab))

    @classmethod
    def paper_minkowski_2d(cls, slab=None):
        """Flat plane with metric ``dy^2 - dx^2``; ``x`` is the temporal label."""
        slab = slab if slab is not None else default_slab(2)
        return cls(2, Kind.PAPER_MINKOWSKI_2D, ("x", "y"), _as_slab(slab))

    @classmethod
    def conformally_flat(cls, factor, dim=2, slab=None):
        """Metric ``a(t)^2 (-dt^2 + |dx|^2)`` with ``factor`` an expression in ``t``."""
        slab = slab if slab is not None else default_slab(dim)
        labels = _DEFAULT_LABELS[:dim]
        expr = factor if isinstance(factor, Expr) else parse_expression(str(factor), labels[:1])
        return cls(dim, Kind.CONFORMALLY_FLAT, labels, _as_slab(slab), conformal_factor=expr,
                   source={"factor": str(factor)})

    @classmethod
    def custom(cls, components, dim=None, slab=None):
        """Metric given by a symmetric matrix of component expressions.

        ``components[i][j]`` is the text of ``g_ij`` in the chart labels
        ``t, x, y, z`` (truncated to ``dim``).
        """
        dim = dim if dim is not None else len(components)
        labels = _DEFAULT_LABELS[:dim]
        if len(components) != dim or any(len(row) != dim for row in components):
            raise ConfigError("metric components must form a dim x dim matrix")
        parsed = tuple(
            tuple(c if isinstance(c, Expr) else parse_expression(str(c), labels) for c in row)
            for row in components
        )
        for i, j in itertools.combinations(range(dim), 2):
            if parsed[i][j] != parsed[j][i]:
                raise ConfigError(f"metric components g[{i}][{j}] and g[{j}][{i}] differ")
        slab = slab if slab is not None else default_slab(dim)
        return cls(dim, Kind.CUSTOM, labels, _as_slab(slab), components=parsed,
                   source={"components": [[str(c) for c in row] for row in components]})

    @classmethod
    def from_config(cls, cfg):
        """Build from ``{"kind", "dim", "slab", "params"}``."""
        allowed = {"kind", "dim", "slab", "params"}
        unknown = set(cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown spacetime keys: {sorted(unknown)}")
        try:
            kind = Kind(cfg["kind"])
        except (KeyError, ValueError):
            raise ConfigError(f"unknown spacetime kind {cfg.get('kind')!r}") from None
        dim = int(cfg.get("dim", 2))
        slab = cfg.get("slab")
        slab = Slab(slab["t"], slab["space"]) if slab is not None else None
        params = cfg.get("params", {}) or {}
        if kind is Kind.MINKOWSKI:
            return cls.minkowski(dim, slab)
        if kind is Kind.PAPER_MINKOWSKI_2D:
            if dim != 2:
                raise ConfigError("paper_minkowski_2d is two-dimensional")
            return cls.paper_minkowski_2d(slab)
        if kind is Kind.CONFORMALLY_FLAT:
            if "factor" not in params:
                raise ConfigError("conformally_flat needs params.factor")
            return cls.conformally_flat(params["factor"], dim, slab)
        if "components" not in params:
            raise ConfigError("custom needs params.components")
        return cls.custom(params["components"], dim, slab)

    def to_config(self):
        cfg = {"kind": self.kind.value, "dim": self.dim, "slab": self.slab.to_config()}
        if self.source:
            cfg["params"] = dict(self.source)
        return cfg

    # properties -----------------------------------------------------------

    @property
    def is_flat(self):
        return self.kind in (Kind.MINKOWSKI, Kind.PAPER_MINKOWSKI_2D)

    @property
    def has_flat_cone(self):
        """Causal relations coincide with the flat cone of the chart."""
        return self.kind is not Kind.CUSTOM

    @property
    def time_label(self):
        return self.labels[0]

    @cached_property
    def _factor_derivative(self):
        return self.conformal_factor.diff(self.labels[0])

    @cached_property
    def _component_derivatives(self):
        return tuple(
            tuple(tuple(c.diff(lab) for lab in self.labels) for c in row) for row in self.components
        )

    @cached_property
    def light_speed_bounds(self):
        """(slowest, fastest) coordinate light speed over a sample of the slab."""
        if self.has_flat_cone:
            return 1.0, 1.0
        pts = _slab_samples(self.slab, 7)
        gs = metric_field(self, pts)
        n = self.dim - 1
        dirs = _sphere_samples(n, 24)
        speeds = []
        for g in gs:
            for u in dirs:
                a = g[0, 0]
                b = 2.0 * g[0, 1:] @ u
                c = u @ g[1:, 1:] @ u
                disc = b * b - 4 * a * c
                roots = [(-b + s * np.sqrt(disc)) / (2 * c) for s in (1, -1)]
                speeds.append(max(roots))
        return float(min(speeds)), float(max(speeds))

    def _check_signature(self):
        pts = _slab_samples(self.slab, 9 if self.dim <= 3 else 5)
        for p, g in zip(pts, metric_field(self, pts)):
            if not np.all(np.isfinite(g)):
                raise SignatureError(f"metric not finite at {p}")
            ev = np.linalg.eigvalsh(g)
            if np.sum(ev < 0) != 1 or np.any(np.abs(ev) < 1e-12):
                raise SignatureError(f"metric signature is not (-,+,...,+) at {p}")
            if g[0, 0] >= 0:
                raise SignatureError(f"d/{self.labels[0]} is not timelike at {p}")


def _as_slab(slab):
    if isinstance(slab, Slab):
        return slab
    if isinstance(slab, dict):
        return Slab(slab["t"], slab["space"])
    t, space = slab
    return Slab(t, space)


def _slab_samples(slab, n):
    axes = [np.linspace(slab.t[0], slab.t[1], n)] + [np.linspace(lo, hi, n) for lo, hi in slab.space]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _sphere_samples(n, count):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    rng = np.random.default_rng(0)
    v = rng.normal(size=(count, n))
    v = np.concatenate([v, np.eye(n), -np.eye(n)])
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _eta(dim):
    e = np.eye(dim)
    e[0, 0] = -1.0
    return e


def _check_point(st, p):
    p = np.asarray(p, dtype=float)
    if p.shape != (st.dim,):
        raise ValueError(f"expected an event with {st.dim} coordinates, got shape {p.shape}")
    if not st.slab.contains(p):
        raise PointOutsideSlab(f"event {p} is outside the slab")
    return p


# metric ------------------------------------------------------------------

def metric_at(st, p, check=True):
    """Metric matrix ``g_ij(p)`` in chart coordinates."""
    p = _check_point(st, p) if check else np.asarray(p, dtype=float)
    if st.is_flat:
        return _eta(st.dim)
    if st.kind is Kind.CONFORMALLY_FLAT:
        a = st.conformal_factor.evaluate({st.labels[0]: p[0]})
        return (a * a) * _eta(st.dim)
    env = dict(zip(st.labels, p))
    return np.array([[float(c.evaluate(env)) for c in row] for row in st.components])


def metric_field(st, points):
    """Vectorized metric: ``points`` of shape (..., dim) -> (..., dim, dim)."""
    points = np.asarray(points, dtype=float)
    shape = points.shape[:-1]
    if st.is_flat:
        return np.broadcast_to(_eta(st.dim), shape + (st.dim, st.dim)).copy()
    if st.kind is Kind.CONFORMALLY_FLAT:
        a = np.broadcast_to(st.conformal_factor.evaluate({st.labels[0]: points[..., 0]}), shape)
        return (a * a)[..., None, None] * _eta(st.dim)
    env = {lab: points[..., i] for i, lab in enumerate(st.labels)}
    out = np.empty(shape + (st.dim, st.dim))
    for i in range(st.dim):
        for j in range(st.dim):
            out[..., i, j] = np.broadcast_to(st.components[i][j].evaluate(env), shape)
    return out


def inverse_metric_at(st, p, check=True):
    if st.is_flat:
        return _eta(st.dim)
    if st.kind is Kind.CONFORMALLY_FLAT:
        p = _check_point(st, p) if check else np.asarray(p, dtype=float)
        a = st.conformal_factor.evaluate({st.labels[0]: p[0]})
        return _eta(st.dim) / (a * a)
    return np.linalg.inv(metric_at(st, p, check))


def inner(st, p, v, w, check=True):
    """``g_p(v, w)``."""
    return float(np.asarray(v) @ metric_at(st, p, check) @ np.asarray(w))


def time_orientation_field(st, p):
    """The time-orienting field ``X(p) = d/dt`` (future-directed)."""
    e = np.zeros(st.dim)
    e[0] = 1.0
    return e


# causal character -----------------------------------------------------------

def classify_vector(st, p, V, tol=DEFAULT):
    """Causal character of tangent vector ``V`` at event ``p``."""
    V = np.asarray(V, dtype=float)
    if not np.all(np.isfinite(V)):
        raise ValueError("tangent vector must be finite")
    scale = float(V @ V)
    if scale == 0.0:
        return CausalClass.ZERO
    g = metric_at(st, p)
    q = float(V @ g @ V)
    if q > tol.tol_class * scale:
        return CausalClass.SPACELIKE
    gx = float(g[0] @ V)  # g(X, V) with X = d/dt
    lightlike = abs(q) <= tol.tol_class * scale
    if gx < 0:
        return CausalClass.LIGHTLIKE_FUTURE if lightlike else CausalClass.TIMELIKE_FUTURE
    return CausalClass.LIGHTLIKE_PAST if lightlike else CausalClass.TIMELIKE_PAST


def lorentz_norm(st, p, V, tol=DEFAULT):
    """``sqrt(-g(V, V))`` for causal or zero ``V``."""
    V = np.asarray(V, dtype=float)
    q = float(V @ metric_at(st, p) @ V)
    scale = float(V @ V)
    if q > tol.tol_class * scale:
        raise SpacelikeVector(f"g(V, V) = {q:.3e} > 0")
    return float(np.sqrt(max(0.0, -q)))


# connection ---------------------------------------------------------------

def _conformal_log_rate(st, t):
    env = {st.labels[0]: t}
    return float(st._factor_derivative.evaluate(env)) / float(st.conformal_factor.evaluate(env))


def christoffel_at(st, p, check=True):
    """Levi-Civita coefficients ``G[k, i, j] = Gamma^k_ij`` at ``p``.

    Exact zeros for the flat kinds; analytic (symbolic metric derivatives)
    for the expression-defined kinds.
    """
    p = _check_point(st, p) if check else np.asarray(p, dtype=float)
    n = st.dim
    if st.is_flat:
        return np.zeros((n, n, n))
    if st.kind is Kind.CONFORMALLY_FLAT:
        # g = a^2 eta: Gamma^k_ij = d_i w delta^k_j + d_j w delta^k_i - eta_ij eta^kl d_l w,
        # with w = log a depending on t only
        w = _conformal_log_rate(st, p[0])
        G = np.zeros((n, n, n))
        G[0, 0, 0] = w
        for i in range(1, n):
            G[0, i, i] = w
            G[i, 0, i] = w
            G[i, i, 0] = w
        return G
    env = dict(zip(st.labels, p))
    dg = np.array([[[float(d.evaluate(env)) for d in derivs] for derivs in row]
                   for row in st._component_derivatives])  # dg[i, j, l] = d_l g_ij
    return _christoffel_from_derivatives(inverse_metric_at(st, p, check=False), dg)


def _christoffel_from_derivatives(ginv, dg):
    # Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    term = np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    return 0.5 * np.einsum("kl,lij->kij", ginv, term)


def christoffel_fd(st, p, h=None):
    """Christoffel symbols from central differences of the metric components."""
    p = _check_point(st, p)
    h = DEFAULT.h_fd if h is None else h
    n = st.dim
    dg = np.empty((n, n, n))
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        dg[:, :, l] = (metric_at(st, p + e, check=False) - metric_at(st, p - e, check=False)) / (2 * h)
    return _christoffel_from_derivatives(np.linalg.inv(metric_at(st, p)), dg)


def geodesic_acceleration(st, p, v):
    """Right-hand side ``-Gamma^k_ij v^i v^j`` of the geodesic equation."""
    if st.is_flat:
        return np.zeros(st.dim)
    if st.kind is Kind.CONFORMALLY_FLAT:
        w = _conformal_log_rate(st, p[0])
        acc = np.empty(st.dim)
        acc[0] = -w * (v[0] * v[0] + v[1:] @ v[1:])
        acc[1:] = -2.0 * w * v[0] * v[1:]
        return acc
    G = christoffel_at(st, p, check=False)
    return -np.einsum("kij,i,j->k", G, v, v)
