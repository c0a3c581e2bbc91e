import csv

import numpy as np
import pytest

from conftest import linear_exact
from lorentzian_eikonal.causal import CauchySurface, InitialDatum
from lorentzian_eikonal.errors import (
    DomainEdge,
    EmptyLevelSet,
    MultipleRoots,
    NonDifferentiable,
    NonNegativeC,
    NonpositiveArclength,
)
from lorentzian_eikonal.lax_oleinik import GridSpec, solve_at, solve_grid
from lorentzian_eikonal.spacetime import Spacetime, classify_vector, metric_at
from lorentzian_eikonal.verify import (
    Orientation,
    SequenceRule,
    achronality_of_points,
    comparison_bound_f_c,
    counterexample_family,
    eikonal_residual,
    empirical_semiconcavity_constant,
    level_set_achronality,
    level_set_points,
    numeric_gradient,
    predicted_semiconcavity_constant,
    reachable_gradients,
    reflected,
    semiconcavity_check,
    stability_experiment,
    time_orientation,
    uniqueness_audit,
    verify_field,
    viscosity_check,
)


def u_flat(p):
    return np.asarray(p, float)[..., 0] - 1.0


def u_square(p):
    return np.asarray(p, float)[..., 0] ** 2


@pytest.fixture(scope="module")
def family():
    return counterexample_family(-1.0)


@pytest.fixture(scope="module")
def solver(mink, flat_surface):
    return lambda p: solve_at(mink, flat_surface, p).value


def _before_surface(level):
    return lambda x, step: bool(x[0] + step < level and np.all(np.abs(x[1:]) + step < 3))


def test_gradient_of_affine_field(mink):
    np.testing.assert_allclose(numeric_gradient(mink, u_flat, [0.2, 0.3]), [-1.0, 0.0], atol=1e-10)


def test_counterexample_gradients(family):
    st_ = family.st
    g = numeric_gradient(st_, family, [-0.5, 0.0])
    assert g @ metric_at(st_, [-0.5, 0.0]) @ g == pytest.approx(-1.0, abs=1e-9)
    assert numeric_gradient(st_, family, [-1.0, 0.0]) is None


def test_gradient_near_domain_edge(mink):
    with pytest.raises(DomainEdge):
        numeric_gradient(mink, u_flat, [2.0, 0.0])


def test_residual_examples(mink):
    assert eikonal_residual(mink, u_flat, [0.1, 0.4]) == pytest.approx(0.0, abs=1e-9)
    assert eikonal_residual(mink, linear_exact, [0.1, 0.4]) == pytest.approx(0.0, abs=1e-9)
    assert eikonal_residual(mink, u_square, [1.0, 0.0]) == pytest.approx(-3.0, abs=1e-7)


def test_residual_at_kink_raises(family):
    with pytest.raises(NonDifferentiable):
        eikonal_residual(family.st, family, [-1.0, 0.3])


def test_residual_of_the_solver_output(mink, flat_surface, solver):
    for p in ([-0.5, 0.0], [0.3, 0.7]):
        assert abs(eikonal_residual(mink, solver, p, domain=_before_surface(1.0))) < 1e-3


def test_reachable_gradients_at_kink(family):
    st_ = family.st
    probe = reachable_gradients(st_, family, [-1.0, 0.2])
    assert not probe.differentiable
    assert len(probe.reachable) == 2
    t_parts = sorted(v[0] for v in probe.reachable)
    assert t_parts == pytest.approx([-1.0, 1.0], abs=1e-6)
    for v in probe.reachable:
        assert v @ metric_at(st_, [-1.0, 0.2]) @ v == pytest.approx(-1.0, abs=1e-6)
    assert probe.kink == "convex"
    assert probe.super == [] and len(probe.sub) == 2


def test_reachable_gradients_at_smooth_point(mink):
    probe = reachable_gradients(mink, linear_exact, [0.0, 0.0])
    assert probe.differentiable and len(probe.reachable) == 1


def test_cluster_centres_stable_under_radius_halving(family):
    a = reachable_gradients(family.st, family, [-1.0, 0.0], radius=1e-2)
    b = reachable_gradients(family.st, family, [-1.0, 0.0], radius=5e-3)
    for v in a.reachable:
        assert min(np.linalg.norm(v - w) for w in b.reachable) < 1e-5


def test_viscosity_of_constant_data_solution(mink):
    frag = viscosity_check(mink, u_flat, [0.0, 0.0])
    assert frag.passed
    for _, _, q in frag.witnesses:
        assert q == pytest.approx(-1.0, abs=1e-9)


def test_viscosity_at_convex_kink(family):
    frag = viscosity_check(family.st, family, [-1.0, 0.0])
    assert frag.passed
    assert frag.sub_vacuous and not frag.super_vacuous
    for test, V, q in frag.witnesses:
        assert test == "super" and q >= -1.0 - 1e-9


def test_viscosity_control_field_fails(mink):
    assert not viscosity_check(mink, u_square, [1.0, 0.0]).supersolution
    assert not viscosity_check(mink, u_square, [0.25, 0.0]).subsolution
    assert viscosity_check(mink, u_square, [0.5, 0.0]).passed
    assert viscosity_check(mink, u_square, [1.0, 0.0]).violations


def test_orientation_of_constant_data_solution(mink):
    pts = np.array([[t, x] for t in (-1.0, -0.5, 0.0, 0.5) for x in (-1.0, 0.0, 1.0)])
    assert time_orientation(mink, u_flat, pts).orientation is Orientation.PAST_CONSISTENT


def test_orientation_of_counterexample_is_mixed_at_c(family):
    pts = np.array([[t, 0.0] for t in np.linspace(-1.8, -0.2, 9)])
    verdict = time_orientation(family.st, family, pts)
    assert verdict.orientation is Orientation.MIXED
    assert any(abs(p[0] + 1.0) < 1e-3 for p in verdict.locations)


def test_orientation_of_time_reflections(mink):
    pts = np.array([[t, x] for t in (0.2, 0.6, 1.0) for x in (-0.5, 0.5)])
    assert time_orientation(mink, reflected(linear_exact), pts).orientation is Orientation.FUTURE_CONSISTENT
    assert time_orientation(mink, reflected(linear_exact, -1.0), pts).orientation is Orientation.PAST_CONSISTENT


def test_semiconcavity_examples():
    a, b = np.array([-0.3, -0.2]), np.array([0.1, 0.4])
    assert semiconcavity_check(u_flat, a, b, 0.0).passed
    concave = lambda p: -abs(np.asarray(p)[..., 1])  # noqa: E731
    convex = lambda p: abs(np.asarray(p)[..., 1])  # noqa: E731
    assert semiconcavity_check(concave, [0, -0.3], [0, 0.2], 0.0).passed
    for C in (1.0, 100.0):
        fails = [not semiconcavity_check(convex, [0, -L], [0, L], C).passed for L in (1e-1, 1e-2, 1e-3)]
        assert fails[-1]


def test_semiconvex_variant():
    convex = lambda p: abs(np.asarray(p)[..., 1])  # noqa: E731
    assert semiconcavity_check(convex, [0, -0.3], [0, 0.2], 0.0, kind="semiconvex").passed


def test_empirical_constant_of_smooth_field():
    f = lambda p: np.asarray(p)[..., 1] ** 2  # noqa: E731
    segs = [([0, -0.1], [0, 0.1]), ([0, 0.3], [0.1, 0.5])]
    assert empirical_semiconcavity_constant(f, segs) == pytest.approx(2.0, rel=1e-6)
    assert empirical_semiconcavity_constant(lambda p: -f(p), segs) == 0.0


@pytest.mark.parametrize("c, s, value", [
    (0.0, 2.0, 0.5),
    (-1.0, np.pi / 4, 1.0),
    (-1.0, np.pi / 2 + 0.1, -np.tan(0.1)),
    (-1.0, 4.0, 1 / np.pi),
    (1.0, 1.0, 1 / np.tanh(1.0)),
])
def test_comparison_bound(c, s, value):
    assert comparison_bound_f_c(c, s) == pytest.approx(value, rel=1e-12)


def test_comparison_bound_needs_positive_arclength():
    with pytest.raises(NonpositiveArclength):
        comparison_bound_f_c(0.0, 0.0)


def test_predicted_constant_for_constant_data(mink, flat_surface):
    assert predicted_semiconcavity_constant(mink, flat_surface, [[0.8, 0.0]]) == pytest.approx(10.0, rel=1e-9)


def test_level_sets(mink, flat_surface, linear_surface):
    grid = GridSpec.box((-1, 1), [(-1, 1)], (21, 11), t_open_end=True)
    flat = solve_grid(mink, flat_surface, grid)
    res = level_set_achronality(mink, flat, -0.5)
    assert res.passed
    np.testing.assert_allclose(res.points[:, 0], 0.5, atol=1e-12)
    lin = solve_grid(mink, linear_surface, grid)
    res = level_set_achronality(mink, lin, -1.25)
    assert res.passed and res.n_pairs > 0


def test_level_set_of_callable_by_root_finding(mink):
    pts = level_set_points(linear_exact, -1.25, np.linspace(-1.9, 0.9, 15), np.linspace(-1, 1, 5)[:, None])
    np.testing.assert_allclose(linear_exact(pts), -1.25, atol=1e-12)


def test_non_achronal_control_is_rejected(mink):
    xs = np.linspace(-0.9, 0.9, 19)
    res = achronality_of_points(mink, np.column_stack([2 * xs, xs]))
    assert not res.passed and res.violations


def test_level_set_errors(mink):
    with pytest.raises(EmptyLevelSet):
        level_set_points(u_flat, 5.0, np.linspace(-1, 0.9, 10), [[0.0]])
    wave = lambda p: np.sin(4 * np.asarray(p)[..., 0])  # noqa: E731
    with pytest.raises(MultipleRoots):
        level_set_points(wave, 0.0, np.linspace(-1.5, 1.5, 40), [[0.0]])


GRID = GridSpec.box((-1, 0.5), [(-1, 1)], (7, 9))


def test_constant_shifts_move_the_solution_exactly(mink, flat_surface):
    rep = stability_experiment(mink, flat_surface, SequenceRule.shift(), GRID, ns=(1, 2, 4))
    np.testing.assert_allclose(rep.errors, [1.0, 0.5, 0.25], atol=1e-12)
    assert rep.passed


def test_sine_perturbations_are_dominated(mink, flat_surface):
    rep = stability_experiment(mink, flat_surface, SequenceRule.sine(), GRID, ns=(1, 2, 4, 8))
    assert all(rep.dominated)
    assert rep.as_dict()["rule"] == "sine"


def test_decreasing_data_give_decreasing_solutions(mink, flat_surface):
    prev = None
    for n in (1, 2, 4, 8):
        surf = flat_surface.with_datum(flat_surface.datum + InitialDatum.sinusoidal(0.5 / n, [1.0], np.pi / 2)
                                       + InitialDatum.constant(0.5 / n))
        vals = solve_grid(mink, surf, GRID).values
        if prev is not None:
            assert np.all(vals <= prev + 1e-8)
        prev = vals


def test_counterexample_values(family):
    assert family([-0.5, 0.0]) == pytest.approx(-0.5)
    assert family([-1.5, 0.0]) == pytest.approx(-0.5)
    assert family.variational([-1.5, 0.0]) == -1.5
    assert family([0.0, 0.7]) == 0.0
    with pytest.raises(NonNegativeC):
        counterexample_family(0.0)


def test_counterexample_disagreement_region(family):
    xs = np.linspace(-1.9, 0, 39)
    pts = np.column_stack([xs, np.zeros_like(xs)])
    diff = family.disagreement(pts)
    below = xs < -1.0
    np.testing.assert_allclose(diff[below], 2 * np.abs(xs[below] + 1.0), atol=1e-12)
    np.testing.assert_allclose(diff[~below], 0.0, atol=1e-12)


def test_uniqueness_audit(family):
    st_ = family.st
    surf = CauchySurface.over(st_, 0.0, InitialDatum.constant(0.0))
    pts = np.array([[t, y] for t in np.linspace(-1.8, -0.1, 8) for y in (-0.5, 0.5)])
    bdry = np.linspace(-1, 1, 11)[:, None]
    bad = uniqueness_audit(st_, surf, family, family.variational, pts, bdry)
    assert bad.failed_premises == ["past_consistent"]
    assert bad.viscosity and bad.boundary_error == 0.0
    good = uniqueness_audit(st_, surf, family.variational, family.variational, pts, bdry)
    assert good.premises_hold and good.consistent


def test_verify_field_report(tmp_path, mink):
    pts = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]])
    rep = verify_field(mink, u_square, pts)
    assert rep.violations and rep.n_probes == 3
    rep.to_json(tmp_path / "r.json")
    rep.violations_to_csv(tmp_path / "v.csv")
    rows = list(csv.reader(open(tmp_path / "v.csv")))
    assert rows[0] == ["test", "point", "V", "gVV"] and len(rows) > 1
    ok = verify_field(mink, u_flat, pts)
    assert not ok.violations and ok.residual_max < 1e-9
    assert ok.orientation["orientation"] == "PastConsistent"


def test_gradient_clusters_of_solution_are_past_timelike(mink, solver):
    for p in ([-0.5, 0.2], [0.0, -0.7]):
        probe = reachable_gradients(mink, solver, p, domain=_before_surface(1.0))
        for V in probe.reachable:
            c = classify_vector(mink, p, V)
            assert c.is_timelike and c.is_past
