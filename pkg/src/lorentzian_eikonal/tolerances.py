"""Numerical tolerances used across the package.

All values are absolute unless noted. ``tol_class`` is relative to the
squared Euclidean norm of the tested vector.
"""

from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError


@dataclass(frozen=True)
class Tolerances:
    tol_class: float = 1e-9     # lightlike band for g(V, V)
    tol_cone: float = 1e-7      # light-cone membership, chart units
    tol_ode: float = 1e-9       # geodesic local error per unit Euclidean arclength
    tol_hit: float = 1e-12      # terminal event location in t
    tol_bvp: float = 1e-9       # shooting endpoint error, chart units
    tol_dist: float = 1e-6      # distance agreement between backends
    tol_solve: float = 1e-8     # value accuracy of the variational minimization
    tol_cluster: float = 1e-6   # minimizers within this of the best are all reported
    tol_cal: float = 1e-5       # calibration identity along rays
    tol_visc: float = 1e-3      # viscosity inequalities
    tol_kink: float = 1e-2      # disagreement of one-sided difference quotients
    h_fd: float = 1e-5          # finite-difference step for metric derivatives

    def override(self, **overrides):
        """Return a copy with some values replaced; each must lie in (0, 1)."""
        known = {f.name for f in fields(self)}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(f"unknown tolerance {key!r}")
            if not isinstance(value, (int, float)) or not 0.0 < float(value) < 1.0:
                raise ConfigError(f"tolerance {key} must lie in (0, 1), got {value!r}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self):
        return asdict(self)


DEFAULT = Tolerances()
