import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorentzian_eikonal.distance import (
    Backend,
    DistanceFrom,
    OracleGrid,
    conformal_distance,
    distance_oracle_dag,
    distance_table,
    flat_distance,
    lorentz_distance,
    segment_length,
    write_distance_table_csv,
)
from lorentzian_eikonal.errors import GridTooCoarse, PointOutsideSlab
from lorentzian_eikonal.geodesic import lorentz_length
from lorentzian_eikonal.spacetime import Spacetime

# independent oracle values: mpmath (30 digits) solving for the conserved momentum
# of the conformal geodesic and integrating the proper time
CONFORMAL_CASES = [
    ("1 + 0.1*t", (0.0, 0.0), (1.5, 0.4), 1.5541992322135534),
    ("1 + 0.1*t", (0.0, 0.0), (1.0, 0.9), 0.45782449118521197),
    ("1 + 0.1*t", (-0.5, 0.0), (1.0, 0.3), 1.5064900340271336),
]
CONFORMAL_3D = ("exp(0.2*t)", (0.0, 0.0, 0.0), (1.0, 0.3, -0.2), 1.0327770121600827)


@pytest.mark.parametrize("y, d", [((1, 0), 1.0), ((2, 1), np.sqrt(3.0)), ((1, 2), 0.0), ((1, 1), 0.0)])
def test_minkowski_examples(mink, y, d):
    r = lorentz_distance(mink, [0, 0], y)
    assert r.backend is Backend.ANALYTIC
    assert r.value == pytest.approx(d, abs=1e-15)


def test_out_of_slab_events_rejected(mink):
    with pytest.raises(PointOutsideSlab):
        lorentz_distance(mink, [0, 0], [0, 7])


@pytest.mark.parametrize("factor, x, y, d", CONFORMAL_CASES + [CONFORMAL_3D])
def test_conformal_distance_against_frozen_oracle(factor, x, y, d):
    st_ = Spacetime.conformally_flat(factor, len(x))
    r = lorentz_distance(st_, x, y, realizer=True)
    assert r.backend is Backend.SHOOTING
    assert r.value == pytest.approx(d, abs=1e-8)
    assert conformal_distance(st_, x, y)[0] == pytest.approx(d, abs=1e-12)
    np.testing.assert_allclose(r.realizer.start, x, atol=1e-12)
    np.testing.assert_allclose(r.realizer.end, y, atol=1e-9)
    assert abs(lorentz_length(st_, r.realizer) - r.value) < 1e-6
    assert all(c.is_timelike for c in r.realizer.causal_classes(st_))


def test_distance_from_anchor_both_directions(conformal):
    fwd = DistanceFrom(conformal, [0, 0])
    back = DistanceFrom(conformal, [1.5, 0.4], reverse=True)
    assert fwd([1.5, 0.4]) == pytest.approx(CONFORMAL_CASES[0][3], abs=1e-12)
    assert back([0, 0]) == pytest.approx(CONFORMAL_CASES[0][3], abs=1e-12)
    assert fwd([1.0, 1.2]) == 0.0


def test_distance_from_shooting_uses_warm_starts():
    st_ = Spacetime.custom([["-(1 + 0.1*t)**2", "0"], ["0", "(1 + 0.1*t)**2"]])
    conf = Spacetime.conformally_flat("1 + 0.1*t", 2)
    df = DistanceFrom(st_, [0, 0])
    ys = np.array([[1.0, v] for v in np.linspace(-0.8, 0.8, 9)])
    vals = df.many(ys)
    ref = [conformal_distance(conf, [0, 0], y)[0] for y in ys]
    np.testing.assert_allclose(vals, ref, atol=1e-8)
    assert df.fallbacks == 0


def test_oracle_minkowski_unit_time(mink):
    v = distance_oracle_dag(mink, [0, 0], [1, 0], OracleGrid(n_t=101, stencil=5))
    assert abs(v - 1.0) < 0.02


def test_oracle_is_monotone_under_refinement(conformal):
    grid = OracleGrid(n_t=11, stencil=3)
    prev = -np.inf
    for _ in range(4):
        v = distance_oracle_dag(conformal, [0, 0], [1.5, 0.4], grid)
        assert v >= prev - 1e-12
        prev, grid = v, grid.refined()


def test_oracle_is_a_lower_bound(conformal):
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = np.array([rng.uniform(-1.5, 0), rng.uniform(-1, 1)])
        dt = rng.uniform(0.3, 1.5)
        y = x + [dt, rng.uniform(-0.9, 0.9) * dt]
        v = distance_oracle_dag(conformal, x, y, OracleGrid(n_t=41, stencil=4))
        assert v <= lorentz_distance(conformal, x, y).value + 1e-6


def test_oracle_on_custom_metric_and_coarse_grid_error():
    st_ = Spacetime.custom([["-(1 + x**2)", "0"], ["0", "1"]], slab=((-2, 2), ((-2, 2),)))
    x, y = [0.0, -0.5], [1.0, 0.505]
    with pytest.raises(GridTooCoarse):
        distance_oracle_dag(st_, x, y, OracleGrid(n_t=2, stencil=1))
    assert distance_oracle_dag(st_, x, y, OracleGrid(n_t=41, stencil=4, n_space=321)) > 0


def test_oracle_unrelated_pairs_are_zero(mink):
    assert distance_oracle_dag(mink, [0, 0], [1, 2], OracleGrid(n_t=11)) == 0.0
    assert distance_oracle_dag(mink, [0, 0], [-1, 0], OracleGrid(n_t=11)) == 0.0


def test_segment_length_is_a_lower_bound(conformal):
    assert segment_length(conformal, [0, 0], [1.5, 0.4]) <= CONFORMAL_CASES[0][3]
    assert segment_length(conformal, [0, 0], [1, 2]) == 0.0


def test_distance_table_csv(tmp_path, mink):
    rows = distance_table(mink, [([0, 0], [1, 0]), ([0, 0], [2, 1])])
    path = tmp_path / "d.csv"
    write_distance_table_csv(path, rows, mink.labels)
    body = list(csv.reader(open(path)))
    assert body[0] == ["x_t", "x_x", "y_t", "y_x", "d", "backend"]
    assert float(body[2][4]) == pytest.approx(np.sqrt(3.0), abs=1e-16)
    assert body[1][5] == "analytic"


events = st.tuples(st.floats(-1.9, 1.9), st.floats(-1.9, 1.9))


@given(events, events, events)
def test_reverse_triangle_inequality_minkowski(a, b, c):
    x, y, z = sorted([np.array(a), np.array(b), np.array(c)], key=lambda p: p[0])
    dxy, dyz, dxz = flat_distance(x, y), flat_distance(y, z), flat_distance(x, z)
    if dxy > 0 and dyz > 0:
        assert dxz >= dxy + dyz - 1e-6


@given(events, events, events)
def test_reverse_triangle_inequality_conformal(a, b, c):
    st_ = Spacetime.conformally_flat("1 + 0.1*t", 2)
    x, y, z = sorted([np.array(a), np.array(b), np.array(c)], key=lambda p: p[0])
    dxy = conformal_distance(st_, x, y)[0]
    dyz = conformal_distance(st_, y, z)[0]
    if dxy > 0 and dyz > 0:
        assert conformal_distance(st_, x, z)[0] >= dxy + dyz - 1e-6


@given(st.floats(-1.5, 0.5), st.floats(-1, 1), st.floats(0.05, 1.4), st.floats(-0.97, 0.97))
def test_first_integral_agrees_with_closed_form_when_factor_is_constant(t0, x0, dt, frac):
    st_ = Spacetime.conformally_flat("1.5", 2)
    x, y = np.array([t0, x0]), np.array([t0 + dt, x0 + frac * dt])
    assert conformal_distance(st_, x, y)[0] == pytest.approx(1.5 * float(flat_distance(x, y)), rel=1e-10)
