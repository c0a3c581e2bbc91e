"""Viscosity solutions of the timelike Lorentzian eikonal equation with Cauchy data.

The solution in the past of a Cauchy surface ``{t = s}`` is the variational
formula ``u(x) = inf_{y} phi(y) - d(x, y)`` over surface points in the
causal future of ``x``.  Submodules:

``spacetime``   catalog of product spacetimes, metric, causal character, connection
``geodesic``    geodesic integration, Lorentzian length, shooting
``causal``      relations, Cauchy surfaces, initial data, footprints
``distance``    Lorentzian distance backends and the longest-path oracle
``lax_oleinik`` the variational solver, calibrated rays, future-side formula
``verify``      viscosity, orientation, semiconcavity, achronality, stability checks
``cli``         JSON-configured command line front end
"""

from .causal import CauchySurface, InitialDatum, Relation, future_footprint, relation, surface_hit
from .distance import OracleGrid, distance_oracle_dag, lorentz_distance
from .errors import EikonalError
from .expression import parse_expression
from .geodesic import Stop, connect_maximal_geodesic, integrate_geodesic, lorentz_length
from .lax_oleinik import (
    GridSpec,
    SolutionField,
    calibrated_ray,
    solve_at,
    solve_future_side,
    solve_grid,
    upper_support,
)
from .spacetime import CausalClass, Spacetime, classify_vector, lorentz_norm, metric_at
from .tolerances import DEFAULT, Tolerances

__version__ = "0.1.0"

__all__ = [
    "DEFAULT", "CausalClass", "CauchySurface", "EikonalError", "GridSpec", "InitialDatum",
    "OracleGrid", "Relation", "SolutionField", "Spacetime", "Stop", "Tolerances", "calibrated_ray",
    "classify_vector", "connect_maximal_geodesic", "distance_oracle_dag", "future_footprint",
    "integrate_geodesic", "lorentz_distance", "lorentz_length", "lorentz_norm", "metric_at",
    "parse_expression", "relation", "solve_at", "solve_future_side", "solve_grid", "surface_hit",
    "upper_support",
]
