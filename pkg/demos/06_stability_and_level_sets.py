"""Stability under perturbed data and achronal level sets.

Perturbing the data by (1/n) sin(n y) moves the solution by at most 1/n, and
every level set of the solution is achronal: no two of its points can be
joined by a causal curve.
"""

from lorentzian_eikonal import CauchySurface, GridSpec, InitialDatum, Spacetime, solve_grid
from lorentzian_eikonal.verify import SequenceRule, level_set_achronality, stability_experiment

mink = Spacetime.minkowski(2)
surf = CauchySurface.over(mink, 1.0, InitialDatum.constant(0.0))
grid = GridSpec.box((-1, 1), [(-1, 1)], (21, 21), t_open_end=True)

rep = stability_experiment(mink, surf, SequenceRule.sine(), grid)
for n, e, b in zip(rep.ns, rep.errors, rep.bounds):
    print(f"n={n:2}  e_n={e:.6f}  bound={b:.6f}")
print("dominated and strictly decreasing:", rep.passed)

wavy = solve_grid(mink, surf.with_datum(InitialDatum.sinusoidal(0.5, [2.0])), grid)
for level in (-1.5, -1.0, -0.5):
    res = level_set_achronality(mink, wavy, level)
    print(f"level {level}: {len(res.points)} points, {res.n_pairs} pairs, achronal={res.passed}")
