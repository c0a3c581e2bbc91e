"""Calibrated rays and upper support functions.

Along the maximal geodesic from x to its minimizer the solution grows at unit
rate.  A waypoint on that ray yields a smooth function lying above u and
touching it at x, which is the mechanism behind semiconcavity.
"""

import numpy as np

from lorentzian_eikonal import CauchySurface, InitialDatum, Spacetime, calibrated_ray, solve_at, upper_support
from lorentzian_eikonal.lax_oleinik import calibration_defect
from lorentzian_eikonal.verify import predicted_semiconcavity_constant, semiconcavity_check

mink = Spacetime.minkowski(2)
surf = CauchySurface.over(mink, 1.0, InitialDatum.sinusoidal(0.5, [2.0]))
x = np.array([-0.2, 0.3])
r = solve_at(mink, surf, x)
ray = calibrated_ray(mink, surf, r)
print(f"ray from {x} to {ray.points[-1]}, length {ray.params[-1]:.6f}")
print(f"max |u(ray(s)) - u(x) - s| = {calibration_defect(mink, surf, r, ray):.1e}")

sup = upper_support(mink, surf, x)
rng = np.random.default_rng(0)
Z = x + rng.uniform(-0.1, 0.1, size=(200, 2))
gaps = [sup(z) - solve_at(mink, surf, z).value for z in Z]
print(f"support touches at x: {sup(x) - r.value:.1e}; smallest gap nearby {min(gaps):.2e}")

C = predicted_semiconcavity_constant(mink, surf, [[0.5, 0.0], [0.8, 0.5]])
u = lambda p: solve_at(mink, surf, p).value  # noqa: E731
print(f"predicted constant C = {C:.3f}; segment check passes:",
      semiconcavity_check(u, [0.6, -0.2], [0.7, 0.1], C).passed)
