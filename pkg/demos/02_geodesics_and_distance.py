"""Geodesics and the Lorentzian distance.

Integrates a timelike geodesic until it meets a surface, connects two events
by shooting, and compares three independent ways to get a distance on an
expanding conformally flat metric.
"""

import numpy as np

from lorentzian_eikonal import (
    OracleGrid,
    Spacetime,
    Stop,
    connect_maximal_geodesic,
    distance_oracle_dag,
    integrate_geodesic,
    lorentz_distance,
    lorentz_length,
)
from lorentzian_eikonal.distance import conformal_distance, segment_length

st = Spacetime.conformally_flat("1 + 0.1*t", 2)

geo = integrate_geodesic(st, np.array([0.0, 0.0]), np.array([1.0, 0.4]), Stop.level(1.5))
print(f"geodesic hits t=1.5 at {geo.points[-1]}, length {lorentz_length(st, geo):.10f}")

x, y = np.array([0.0, 0.0]), np.array([1.5, 0.4])
shot = connect_maximal_geodesic(st, x, y)
print(f"shooting: endpoint error {np.linalg.norm(shot.points[-1] - y):.1e}, length {shot.length:.12f}")
print(f"conserved momentum quadrature: {conformal_distance(st, x, y)[0]:.12f}")
print(f"straight chart segment: {segment_length(st, x, y):.12f}")
# The lattice value is a lower bound.  It only beats the straight segment once
# the lateral spacing resolves how far the geodesic bends away from it.
for grid in (OracleGrid(101, 5), OracleGrid(101, 5, n_space=801)):
    print(f"longest lattice path on {grid.n_t}x{grid.n_space or grid.n_t} nodes: "
          f"{distance_oracle_dag(st, x, y, grid):.12f}")

print("distance to a spacelike-separated event:", lorentz_distance(st, x, [1.0, 1.5]).value)
