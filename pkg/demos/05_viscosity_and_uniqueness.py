"""Viscosity tests, time orientation and a non-uniqueness example.

u_c(x, y) = |x - c| + c on the plane with metric dy^2 - dx^2 solves the
equation in the viscosity sense and agrees with the data on {x = 0}, yet for
c < 0 it differs from the variational solution below x = c.  The orientation
of its gradients flips across x = c, which is what the uniqueness argument
rules out.
"""

import numpy as np

from lorentzian_eikonal.verify import (
    counterexample_family,
    reachable_gradients,
    time_orientation,
    uniqueness_audit,
    viscosity_check,
)
from lorentzian_eikonal import CauchySurface, InitialDatum

fam = counterexample_family(-1.0)
st = fam.st
for p in ([-0.5, 0.0], [-1.0, 0.0], [-1.5, 0.0]):
    frag = viscosity_check(st, fam, p)
    print(f"{p}: u_c={fam(p):+.2f}, u_phi={fam.variational(p):+.2f}, viscosity pass={frag.passed}")

probe = reachable_gradients(st, fam, [-1.0, 0.0])
print("reachable gradients at the kink:", [np.round(v, 6).tolist() for v in probe.reachable])

pts = np.column_stack([np.linspace(-1.8, -0.2, 9), np.zeros(9)])
print("orientation of u_c:", time_orientation(st, fam, pts).orientation.value)
print("orientation of u_phi:", time_orientation(st, fam.variational, pts).orientation.value)

surf = CauchySurface.over(st, 0.0, InitialDatum.constant(0.0))
audit = uniqueness_audit(st, surf, fam, fam.variational, pts, np.linspace(-1, 1, 11)[:, None])
print("premises that fail for u_c:", audit.failed_premises)
