import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lorentzian_eikonal.errors import ConfigError, PointOutsideSlab, SignatureError, SpacelikeVector
from lorentzian_eikonal.spacetime import (
    CausalClass,
    Spacetime,
    christoffel_at,
    christoffel_fd,
    classify_vector,
    inner,
    lorentz_norm,
    metric_at,
    metric_field,
    time_orientation_field,
)
from lorentzian_eikonal.tolerances import DEFAULT, Tolerances

finite = st.floats(-3, 3, allow_nan=False)


def test_minkowski_metric_at_origin(mink):
    np.testing.assert_array_equal(metric_at(mink, [0, 0]), np.diag([-1.0, 1.0]))


def test_swapped_plane_uses_x_as_time():
    st_ = Spacetime.paper_minkowski_2d()
    assert st_.labels == ("x", "y")
    assert st_.time_label == "x"
    g = metric_at(st_, [0.3, -0.2])
    assert g[0, 0] == -1.0 and g[1, 1] == 1.0 and g[0, 1] == 0.0


def test_conformal_metric_value(conformal):
    np.testing.assert_allclose(metric_at(conformal, [1, 0]), 1.21 * np.diag([-1.0, 1.0]), rtol=1e-15)


def test_points_outside_the_slab_are_rejected(mink):
    with pytest.raises(PointOutsideSlab):
        metric_at(mink, [5.0, 0.0])
    with pytest.raises(PointOutsideSlab):
        christoffel_at(mink, [0.0, 9.0])


@pytest.mark.parametrize("V, expected", [
    ((1, 0), CausalClass.TIMELIKE_FUTURE),
    ((1, 1), CausalClass.LIGHTLIKE_FUTURE),
    ((0, 1), CausalClass.SPACELIKE),
    ((-1, 0.5), CausalClass.TIMELIKE_PAST),
    ((-1, -1), CausalClass.LIGHTLIKE_PAST),
    ((0, 0), CausalClass.ZERO),
])
def test_classification_examples(mink, V, expected):
    assert classify_vector(mink, [0, 0], V) is expected


@pytest.mark.parametrize("V, norm", [((1, 0), 1.0), ((2, 1), np.sqrt(3.0)), ((1, 1), 0.0)])
def test_lorentz_norm_examples(mink, V, norm):
    assert lorentz_norm(mink, [0, 0], V) == pytest.approx(norm, abs=1e-15)


def test_norm_of_spacelike_vector_raises(mink):
    with pytest.raises(SpacelikeVector):
        lorentz_norm(mink, [0, 0], [0.1, 1.0])


def test_minkowski_christoffels_are_exact_zeros():
    for dim in (2, 3, 4):
        st_ = Spacetime.minkowski(dim)
        assert not np.any(christoffel_at(st_, np.zeros(dim)))


def test_conformal_gamma_t_tt(conformal):
    for t in (-1.5, 0.0, 0.7, 1.9):
        G = christoffel_at(conformal, [t, 0.3])
        assert G[0, 0, 0] == pytest.approx(0.1 / (1 + 0.1 * t), rel=1e-14)


def test_christoffels_match_finite_differences_at_random_points():
    rng = np.random.default_rng(0)
    st3 = Spacetime.conformally_flat("exp(0.2*t)", 3)
    for st_ in (Spacetime.conformally_flat("1 + 0.1*t", 2), st3):
        h = DEFAULT.h_fd
        for _ in range(100):
            p = np.concatenate([rng.uniform(-1.9, 1.9, 1), rng.uniform(-3.9, 3.9, st_.dim - 1)])
            np.testing.assert_allclose(christoffel_at(st_, p), christoffel_fd(st_, p, h), atol=10 * h)


def test_christoffels_are_symmetric_at_random_points():
    rng = np.random.default_rng(1)
    kinds = [
        Spacetime.conformally_flat("1 + 0.1*t", 2),
        Spacetime.custom([["-(1 + 0.1*x**2)", "0.1*t"], ["0.1*t", "1 + 0.05*t**2"]]),
    ]
    for st_ in kinds:
        for _ in range(100):
            p = np.concatenate([rng.uniform(-1.9, 1.9, 1), rng.uniform(-3.9, 3.9, 1)])
            G = christoffel_at(st_, p)
            np.testing.assert_allclose(G, np.swapaxes(G, 1, 2), atol=1e-15)


def test_custom_christoffels_match_finite_differences():
    st_ = Spacetime.custom([["-(1 + 0.1*x**2)", "0.1*t"], ["0.1*t", "1 + 0.05*t**2"]])
    rng = np.random.default_rng(2)
    for _ in range(50):
        p = np.array([rng.uniform(-1.9, 1.9), rng.uniform(-3.9, 3.9)])
        np.testing.assert_allclose(christoffel_at(st_, p), christoffel_fd(st_, p), atol=10 * DEFAULT.h_fd)


def test_signature_has_one_negative_eigenvalue_on_a_grid():
    kinds = [Spacetime.minkowski(3), Spacetime.conformally_flat("1 + 0.1*t", 2),
             Spacetime.custom([["-(1 + 0.1*x**2)", "0.1*t"], ["0.1*t", "1 + 0.05*t**2"]])]
    for st_ in kinds:
        axes = [np.linspace(*st_.slab.t, 9)] + [np.linspace(lo, hi, 9) for lo, hi in st_.slab.space]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, st_.dim)
        ev = np.linalg.eigvalsh(metric_field(st_, pts))
        assert np.all(np.sum(ev < 0, axis=1) == 1)


def test_bad_metrics_fail_fast():
    with pytest.raises(SignatureError):
        Spacetime.custom([["1", "0"], ["0", "1"]])
    with pytest.raises(SignatureError):
        Spacetime.conformally_flat("t", 2)
    with pytest.raises(ConfigError):
        Spacetime.minkowski(5)


def test_config_round_trip():
    for st_ in (Spacetime.minkowski(3), Spacetime.paper_minkowski_2d(),
                Spacetime.conformally_flat("1 + 0.1*t", 2),
                Spacetime.custom([["-1", "0"], ["0", "1 + 0.1*t**2"]])):
        again = Spacetime.from_config(st_.to_config())
        assert again.kind == st_.kind and again.dim == st_.dim and again.slab == st_.slab
        p = np.full(st_.dim, 0.3)
        np.testing.assert_array_equal(metric_at(again, p), metric_at(st_, p))
    with pytest.raises(ConfigError):
        Spacetime.from_config({"kind": "minkowski", "dim": 2, "colour": "red"})


def test_time_coordinate_increases_along_future_causal_curves(conformal):
    rng = np.random.default_rng(3)
    for _ in range(200):
        p = np.array([rng.uniform(-1.5, 1.5), rng.uniform(-3, 3)])
        V = np.array([1.0, rng.uniform(-1, 1)])
        assert classify_vector(conformal, p, V).is_future
        assert (p + 1e-3 * V)[0] > p[0]


@given(st.floats(-1.9, 1.9), finite, finite)
def test_classification_trichotomy(t, v0, v1):
    st_ = Spacetime.conformally_flat("1 + 0.1*t", 2)
    c = classify_vector(st_, [t, 0.0], [v0, v1])
    flags = [c is CausalClass.ZERO, c.is_timelike,
             c in (CausalClass.LIGHTLIKE_FUTURE, CausalClass.LIGHTLIKE_PAST), c is CausalClass.SPACELIKE]
    assert sum(flags) == 1
    q = inner(st_, [t, 0.0], [v0, v1], [v0, v1])
    scale = v0 * v0 + v1 * v1
    if c.is_timelike:
        assert q < -DEFAULT.tol_class * scale
    if c is CausalClass.SPACELIKE:
        assert q > DEFAULT.tol_class * scale


def test_past_and_future_labels_follow_the_orienting_field():
    rng = np.random.default_rng(4)
    for st_ in (Spacetime.minkowski(3), Spacetime.conformally_flat("1 + 0.1*t", 3)):
        count = 0
        while count < 1000:
            p = np.concatenate([rng.uniform(-1.5, 1.5, 1), rng.uniform(-3, 3, 2)])
            V = rng.normal(size=3)
            c = classify_vector(st_, p, V)
            if not c.is_causal:
                continue
            count += 1
            gxv = inner(st_, p, time_orientation_field(st_, p), V)
            assert (gxv < 0) if c.is_future else (gxv > 0)


def test_tolerance_overrides_are_range_checked():
    assert Tolerances().override(tol_solve=1e-9).tol_solve == 1e-9
    for bad in (0.0, 1.0, -1e-3, 2.0):
        with pytest.raises(ConfigError):
            Tolerances().override(tol_cone=bad)
    with pytest.raises(ConfigError):
        Tolerances().override(tol_unknown=0.1)


@given(st.floats(allow_nan=False, allow_infinity=False).filter(lambda v: not 0 < v < 1))
def test_tolerances_outside_unit_interval_rejected(value):
    with pytest.raises(ConfigError):
        Tolerances().override(tol_dist=value)
