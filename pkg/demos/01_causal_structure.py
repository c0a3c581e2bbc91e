"""Causal structure of the catalog spacetimes.

Classifies a few tangent vectors, compares causal relations in flat space and
in a conformally flat expansion, and shows the footprint of an event on a
Cauchy surface: the set of surface points a solution value can depend on.
"""

import numpy as np

from lorentzian_eikonal import (
    CauchySurface,
    InitialDatum,
    Spacetime,
    classify_vector,
    future_footprint,
    lorentz_norm,
    metric_at,
    relation,
)

mink = Spacetime.minkowski(2)
print("Minkowski metric at the origin:\n", metric_at(mink, [0.0, 0.0]))

for V in ([1.0, 0.0], [-2.0, 1.0], [1.0, 1.0], [0.5, 2.0]):
    c = classify_vector(mink, [0, 0], V)
    norm = f"{lorentz_norm(mink, [0, 0], V):.4f}" if c.is_causal else "-"
    print(f"V={V!s:12} {c.value:18} norm={norm}")

# A conformal factor rescales lengths but not light cones.
expanding = Spacetime.conformally_flat("1 + 0.1*t", 2)
for y in ([1.0, 0.5], [1.0, 1.0], [1.0, 1.5]):
    print(f"(0,0) -> {y}: flat {relation(mink, [0, 0], y).value:14} "
          f"conformal {relation(expanding, [0, 0], y).value}")

surface = CauchySurface.over(mink, 1.0, InitialDatum.constant(0.0))
fp = future_footprint(mink, surface, np.array([0.0, 0.3]))
print(f"footprint of (0, 0.3) on t=1: centre {fp.center}, radius {fp.radius}")
