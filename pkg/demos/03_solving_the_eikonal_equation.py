"""Solving the eikonal equation from Cauchy data.

The solution in the past of the surface {t = 1} is the infimum of
phi(y) - d(x, y) over surface points y that x can reach.  For constant data
this is t - 1; for linear data 0.75 x the minimizer sits at (1, x - 0.6 (1 - t))
and the value is 0.75 x - 1.25 (1 - t).
"""

import time

import numpy as np

from lorentzian_eikonal import CauchySurface, GridSpec, InitialDatum, Spacetime, solve_at, solve_grid

mink = Spacetime.minkowski(2)
linear = CauchySurface.over(mink, 1.0, InitialDatum.linear([0.75]))

r = solve_at(mink, linear, [0.0, 0.0])
print(f"u(0,0) = {r.value:.12f}, minimizer {r.minimizer}, status {r.status.value}")

grid = GridSpec.box((-1, 1), [(-1, 1)], (51, 51), t_open_end=True)
for name, datum, exact in [
    ("constant", InitialDatum.constant(0.0), lambda P: P[..., 0] - 1.0),
    ("linear", InitialDatum.linear([0.75]), lambda P: 0.75 * P[..., 1] - 1.25 * (1.0 - P[..., 0])),
]:
    t0 = time.perf_counter()
    fld = solve_grid(mink, CauchySurface.over(mink, 1.0, datum), grid)
    print(f"{name:8} 51x51 grid in {time.perf_counter() - t0:.2f}s, max error {fld.max_error(exact):.1e}")

# Oscillating data: no closed form, but the value never drops below min(phi) - d.
wavy = CauchySurface.over(mink, 1.0, InitialDatum.sinusoidal(0.5, [2.0]))
for x in ([-0.5, 0.0], [0.5, 0.7]):
    res = solve_at(mink, wavy, x)
    print(f"wavy data at {x}: u = {res.value:.6f}, minimizers {np.round(res.minimizers, 6).tolist()}")
