"""Causal relations, Cauchy surfaces ``{t = s}`` and the footprints ``J+(x) ∩ Γ``."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError, NoHitInSlab, NotInFuture, NotInPast, PointOutsideSlab
from .expression import Expr, parse_expression
from .geodesic import richardson_step
from .tolerances import DEFAULT


class Relation(enum.Enum):
    CHRONOLOGICAL = "chronological"
    CAUSAL_ONLY = "causal_only"
    UNRELATED = "unrelated"

    @property
    def causal(self):
        return self is not Relation.UNRELATED


# initial data -------------------------------------------------------------------

DATUM_FORMS = ("constant", "linear", "piecewise_linear", "sinusoidal", "expression",
               "tabulated", "sum", "callable")


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """Scalar datum on a Cauchy surface, evaluated on spatial coordinates.

    Evaluation is vectorized: ``datum(Y)`` accepts ``Y`` of shape
    ``(..., n_spatial)`` and returns shape ``(...)``.
    """

    form: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.form not in DATUM_FORMS:
            raise ConfigError(f"unknown datum form {self.form!r}")

    @classmethod
    def constant(cls, c):
        return cls("constant", {"c": float(c)})

    @classmethod
    def linear(cls, a, b=0.0):
        return cls("linear", {"a": np.atleast_1d(np.asarray(a, float)), "b": float(b)})

    @classmethod
    def piecewise_linear(cls, knots, values):
        knots = np.asarray(knots, float)
        if np.any(np.diff(knots) <= 0):
            raise ConfigError("piecewise-linear knots must be increasing")
        return cls("piecewise_linear", {"knots": knots, "values": np.asarray(values, float)})

    @classmethod
    def sinusoidal(cls, amplitude, k, phase=0.0):
        """``amplitude * sin(k . y + phase)``."""
        return cls("sinusoidal", {"A": float(amplitude), "k": np.atleast_1d(np.asarray(k, float)),
                                  "phase": float(phase)})

    @classmethod
    def expression(cls, text, labels):
        labels = tuple(labels)
        expr = text if isinstance(text, Expr) else parse_expression(text, labels)
        return cls("expression", {"expr": expr, "labels": labels, "text": str(text)})

    @classmethod
    def tabulated(cls, axes, values):
        axes = [np.asarray(a, float) for a in np.atleast_2d(axes)] if np.ndim(axes[0]) else [np.asarray(axes, float)]
        values = np.asarray(values, float)
        interp = RegularGridInterpolator(axes, values, method="linear", bounds_error=False, fill_value=None)
        return cls("tabulated", {"axes": axes, "values": values, "interp": interp})

    @classmethod
    def from_callable(cls, fn, description="callable"):
        """Wrap ``fn(Y) -> values``; not serializable."""
        return cls("callable", {"fn": fn, "description": description})

    def plus(self, other):
        return InitialDatum("sum", {"terms": (self, other)})

    def __add__(self, other):
        return self.plus(other)

    @classmethod
    def from_config(cls, cfg, labels):
        cfg = dict(cfg)
        form = cfg.pop("form", None)
        try:
            if form == "constant":
                return cls.constant(cfg.pop("c"))
            if form == "linear":
                return cls.linear(cfg.pop("a"), cfg.pop("b", 0.0))
            if form == "piecewise_linear":
                return cls.piecewise_linear(cfg.pop("knots"), cfg.pop("values"))
            if form == "sinusoidal":
                return cls.sinusoidal(cfg.pop("A"), cfg.pop("k"), cfg.pop("phase", 0.0))
            if form == "expression":
                return cls.expression(cfg.pop("text"), labels)
            if form == "tabulated":
                return cls.tabulated(cfg.pop("axes"), cfg.pop("values"))
        except KeyError as exc:
            raise ConfigError(f"datum form {form!r} is missing {exc}") from None
        finally:
            if cfg and form in DATUM_FORMS:
                raise ConfigError(f"unknown datum keys: {sorted(cfg)}")
        raise ConfigError(f"unknown datum form {form!r}")

    def to_config(self):
        p = self.params
        if self.form == "constant":
            return {"form": "constant", "c": p["c"]}
        if self.form == "linear":
            return {"form": "linear", "a": p["a"].tolist(), "b": p["b"]}
        if self.form == "piecewise_linear":
            return {"form": self.form, "knots": p["knots"].tolist(), "values": p["values"].tolist()}
        if self.form == "sinusoidal":
            return {"form": self.form, "A": p["A"], "k": p["k"].tolist(), "phase": p["phase"]}
        if self.form == "expression":
            return {"form": self.form, "text": p["text"]}
        if self.form == "tabulated":
            return {"form": self.form, "axes": [a.tolist() for a in p["axes"]], "values": p["values"].tolist()}
        if self.form == "sum":
            return {"form": "sum", "terms": [t.to_config() for t in p["terms"]]}
        return {"form": "callable", "description": p["description"]}

    def __call__(self, Y):
        Y = np.asarray(Y, dtype=float)
        shape = Y.shape[:-1]
        p = self.params
        if self.form == "constant":
            return np.full(shape, p["c"]) if shape else p["c"]
        if self.form == "linear":
            return Y @ p["a"] + p["b"]
        if self.form == "piecewise_linear":
            return np.interp(Y[..., 0], p["knots"], p["values"])
        if self.form == "sinusoidal":
            return p["A"] * np.sin(Y @ p["k"] + p["phase"])
        if self.form == "expression":
            env = {lab: Y[..., i] for i, lab in enumerate(p["labels"])}
            out = np.broadcast_to(p["expr"].evaluate(env), shape)
            return out.copy() if shape else float(out)
        if self.form == "tabulated":
            out = p["interp"](Y.reshape(-1, Y.shape[-1])).reshape(shape)
            return out if shape else float(out)
        if self.form == "sum":
            a, b = p["terms"]
            return a(Y) + b(Y)
        out = p["fn"](Y)
        return out

    def lipschitz_constant(self, box, n=201):
        """Largest sampled difference quotient along the coordinate axes of ``box``."""
        axes = [np.linspace(lo, hi, n if len(box) == 1 else max(9, int(n ** (1 / len(box))) + 1))
                for lo, hi in box]
        grids = np.meshgrid(*axes, indexing="ij")
        Y = np.stack(grids, axis=-1)
        vals = np.asarray(self(Y), float)
        lip = 0.0
        for i, ax in enumerate(axes):
            h = ax[1] - ax[0]
            lip = max(lip, float(np.max(np.abs(np.diff(vals, axis=i))) / h))
        return lip


# surfaces -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CauchySurface:
    """The level set ``{t = level}`` over ``domain`` with datum ``datum``."""

    level: float
    domain: tuple
    datum: InitialDatum

    def __post_init__(self):
        object.__setattr__(self, "level", float(self.level))
        object.__setattr__(self, "domain", tuple(tuple(float(v) for v in b) for b in self.domain))

    @classmethod
    def over(cls, st, level, datum, domain=None):
        """Surface inside ``st``'s slab; the domain defaults to the slab's spatial box."""
        if not st.slab.t[0] <= level <= st.slab.t[1]:
            raise PointOutsideSlab(f"level {level} outside the slab {st.slab.t}")
        return cls(level, domain if domain is not None else st.slab.space, datum)

    def event(self, y):
        """Event on the surface with spatial coordinates ``y``."""
        y = np.atleast_1d(np.asarray(y, float))
        return np.concatenate([[self.level], y])

    def phi_at_event(self, p):
        return float(self.datum(np.asarray(p, float)[1:]))

    def lipschitz_constant(self, n=201):
        return self.datum.lipschitz_constant(self.domain, n)

    def with_datum(self, datum):
        return CauchySurface(self.level, self.domain, datum)

    def to_config(self):
        return {"level": self.level, "domain": [list(b) for b in self.domain],
                "datum": self.datum.to_config()}


@dataclass(frozen=True)
class SurfaceRegion:
    """Spatial ball ``|y - center| <= radius`` on a surface, possibly clipped to its domain."""

    center: np.ndarray
    radius: float
    box: tuple
    clipped: bool = False

    def contains(self, y, tol=DEFAULT.tol_cone):
        y = np.asarray(y, float)
        inside_ball = np.linalg.norm(y - self.center, axis=-1) <= self.radius + tol
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        inside_box = np.all((y >= lo - tol) & (y <= hi + tol), axis=-1)
        return inside_ball & inside_box

    @property
    def bounds(self):
        """Bounding box of the region, as (lo, hi) pairs."""
        return tuple((max(c - self.radius, b[0]), min(c + self.radius, b[1]))
                     for c, b in zip(self.center, self.box))


# relations --------------------------------------------------------------------

def relation(st, x, y, tol=DEFAULT):
    """Causal relation of ``x`` to ``y``: chronological, causal-only or unrelated."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    for p in (x, y):
        if not st.slab.contains(p):
            raise PointOutsideSlab(f"event {p} outside the slab")
    dt = y[0] - x[0]
    r = float(np.linalg.norm(y[1:] - x[1:]))
    if st.has_flat_cone:
        # conformal factors do not change the light cones
        return _flat_relation(dt, r, tol.tol_cone)
    c_lo, c_hi = st.light_speed_bounds
    if dt <= 0:
        return _flat_relation(dt, r, tol.tol_cone) if r <= tol.tol_cone else Relation.UNRELATED
    if r < c_lo * dt - tol.tol_cone:
        return Relation.CHRONOLOGICAL
    if r > c_hi * dt + tol.tol_cone:
        return Relation.UNRELATED
    from .distance import OracleGrid, distance_oracle_dag

    value = distance_oracle_dag(st, x, y, OracleGrid(n_t=41, stencil=4, n_space=321), strict=False)
    return Relation.CHRONOLOGICAL if value > tol.tol_dist else Relation.UNRELATED


def _flat_relation(dt, r, tol_cone):
    if dt - r > tol_cone:
        return Relation.CHRONOLOGICAL
    if abs(dt - r) <= tol_cone and dt >= -tol_cone:
        return Relation.CAUSAL_ONLY
    return Relation.UNRELATED


def relation_many(st, x, Y, tol=DEFAULT):
    """Vectorized relation of ``x`` to each row of ``Y`` (flat-cone kinds only)."""
    if not st.has_flat_cone:
        return np.array([relation(st, x, y, tol) for y in Y], dtype=object)
    x, Y = np.asarray(x, float), np.asarray(Y, float)
    dt = Y[:, 0] - x[0]
    r = np.linalg.norm(Y[:, 1:] - x[1:], axis=1)
    out = np.full(len(Y), Relation.UNRELATED, dtype=object)
    out[(np.abs(dt - r) <= tol.tol_cone) & (dt >= -tol.tol_cone)] = Relation.CAUSAL_ONLY
    out[dt - r > tol.tol_cone] = Relation.CHRONOLOGICAL
    return out


# footprints ---------------------------------------------------------------------

def _footprint(st, surface, x, dt):
    if st.has_flat_cone:
        radius = dt
    else:
        radius = st.light_speed_bounds[1] * dt + DEFAULT.tol_cone
    center = np.asarray(x, float)[1:].copy()
    box = surface.domain
    clipped = any(c - radius < b[0] or c + radius > b[1] for c, b in zip(center, box))
    return SurfaceRegion(center, float(radius), box, clipped)


def future_footprint(st, surface, x):
    """Compact region of ``surface`` containing every ``y`` with ``x <= y``.

    Exact (the ball of radius ``level - t(x)``) when the light cones are flat;
    an enclosing ball from the fastest coordinate light speed otherwise.
    """
    x = np.asarray(x, float)
    dt = surface.level - x[0]
    if dt <= 0:
        raise NotInPast(f"event {x} is not in the past of t = {surface.level}")
    return _footprint(st, surface, x, dt)


def past_footprint(st, surface, x):
    """Region of ``surface`` containing every ``y`` with ``y <= x``."""
    x = np.asarray(x, float)
    dt = x[0] - surface.level
    if dt <= 0:
        raise NotInFuture(f"event {x} is not in the future of t = {surface.level}")
    return _footprint(st, surface, x, dt)


def surface_hit(st, surface, geo, tol=DEFAULT):
    """Event where a future-directed sampled geodesic crosses ``surface``.

    The crossing is bracketed by consecutive samples and located by bisection
    over a single re-integrated step from the earlier sample.
    """
    level = surface.level
    t = geo.points[:, 0]
    if t[0] > level + tol.tol_hit:
        raise NotInPast("geodesic starts after the surface")
    hits = np.nonzero(t >= level - tol.tol_hit)[0]
    if len(hits) == 0:
        raise NoHitInSlab("geodesic does not reach the surface inside the slab")
    k = int(hits[0])
    if abs(t[k] - level) <= tol.tol_hit or k == 0:
        p = geo.points[k].copy()
        p[0] = level
        return p
    x, v = geo.points[k - 1], geo.tangents[k - 1]
    lo, hi = 0.0, geo.params[k] - geo.params[k - 1]
    p = geo.points[k]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p, _, _ = richardson_step(st, x, v, mid)
        if abs(p[0] - level) <= tol.tol_hit:
            break
        if p[0] > level:
            hi = mid
        else:
            lo = mid
    p = p.copy()
    p[0] = level
    return p
