import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sturm_uniq.errors import (
    InvalidOperator, NegativePotential, NonpositiveDiffusion, QuadratureFailure, ReferencePointOutOfRange,
)
from sturm_uniq.operator import (
    BoundaryCondition, Closure, Interval, Side, build_scale_speed, make_operator, scale_integral, speed_measure,
)
from sturm_uniq.random_ops import smooth_operators, weil_operator

INF = math.inf


def brownian():
    return make_operator(Interval(-INF, INF), "1", "0", "0", c=0.0)


def bessel(gamma):
    return make_operator(Interval(0.0, INF), "1", f"{gamma}/x", "0", c=1.0)


# -- Interval ---------------------------------------------------------------------

@pytest.mark.parametrize("x0, y0", [(1.0, 1.0), (2.0, 1.0), (INF, INF), (-INF, -INF), (math.nan, 1.0)])
def test_interval_order(x0, y0):
    with pytest.raises(InvalidOperator):
        Interval(x0, y0)


def test_closed_ends_must_be_finite():
    with pytest.raises(InvalidOperator):
        Interval(-INF, 1.0, Closure.CLOSED_LEFT)
    with pytest.raises(InvalidOperator):
        Interval(0.0, INF, Closure.CLOSED_RIGHT)


def test_open_sides():
    assert Interval(0, 1).open_sides() == (Side.LOWER, Side.UPPER)
    assert Interval(0, INF, Closure.CLOSED_LEFT).open_sides() == (Side.UPPER,)
    assert Interval(0, 1, Closure.CLOSED_RIGHT).open_sides() == (Side.LOWER,)


@pytest.mark.parametrize("iv, c", [
    (Interval(0, 2), 1.0), (Interval(0, INF), 1.0), (Interval(-INF, 3), 2.0), (Interval(-INF, INF), 0.0),
])
def test_default_reference(iv, c):
    assert iv.default_reference() == c
    assert make_operator(iv, "1", "0", "0").c == c


# -- make_operator -------------------------------------------------------------------

def test_brownian_is_valid():
    op = brownian()
    assert op.n_probes >= 64
    assert op.boundary_condition is BoundaryCondition.NONE


def test_weil_operator_is_valid():
    op = make_operator(Interval(0, INF), "1", "0.5/x", "0.75/pow(x,2)", c=1.0)
    a, b, V = op.coefficients(np.array([2.0]))
    assert (a[0], b[0], V[0]) == (1.0, 0.25, 0.1875)


def test_negative_potential():
    with pytest.raises(NegativePotential):
        make_operator(Interval(-INF, INF), "1", "0", "-1")


def test_negative_potential_far_from_reference_reports_point():
    with pytest.raises(NegativePotential) as info:
        make_operator(Interval(0, INF), "1", "0", "piecewise(5, 0, -1)", c=1.0)
    assert info.value.x >= 5


def test_nonpositive_diffusion():
    with pytest.raises(NonpositiveDiffusion):
        make_operator(Interval(-INF, INF), "x", "0", "0", c=1.0)


def test_reference_point_out_of_range():
    with pytest.raises(ReferencePointOutOfRange):
        make_operator(Interval(0, 1), "1", "0", "0", c=2.0)
    with pytest.raises(ReferencePointOutOfRange):
        make_operator(Interval(0, 1), "1", "0", "0", c=0.0)


def test_interior_pole_is_invalid():
    with pytest.raises(InvalidOperator):
        make_operator(Interval(0, 4), "1", "log(3-x)", "0", c=1.0)


def test_boundary_condition_needs_closed_end():
    with pytest.raises(InvalidOperator):
        make_operator(Interval(0, INF), "1", "0", "0", boundary_condition="DirichletAtClosed")
    op = make_operator(Interval(0, INF, "ClosedLeft"), "1", "0", "0", boundary_condition="NeumannAtClosed")
    assert op.boundary_condition is BoundaryCondition.NEUMANN


def test_parameters_are_bound():
    op = make_operator(Interval(0, INF), "1", "g/x", "k/pow(x,2)", params={"g": 2.0, "k": 3.0})
    _, b, V = op.coefficients(np.array([1.0]))
    assert (b[0], V[0]) == (2.0, 3.0)


# -- scale and speed ------------------------------------------------------------------

def test_bessel_scale_speed():
    cache = build_scale_speed(bessel(2.0))
    xs = np.array([0.01, 0.3, 1.0, 4.0, 100.0])
    np.testing.assert_allclose(cache.s_prime(xs), xs ** -2.0, rtol=1e-12)
    np.testing.assert_allclose(cache.m_prime(xs), xs ** 2.0, rtol=1e-12)


def test_zero_drift_scale_speed():
    cache = build_scale_speed(brownian())
    xs = np.array([-50.0, -1.0, 0.5, 20.0])
    np.testing.assert_allclose(cache.s_prime(xs), 1.0, rtol=1e-14)
    np.testing.assert_allclose(cache.m_prime(xs), 1.0, rtol=1e-14)


def test_gaussian_drift_scale_speed():
    op = make_operator(Interval(-INF, INF), "1", "-2*x", "0", c=0.0)
    cache = build_scale_speed(op)
    xs = np.array([-3.0, -0.5, 0.0, 1.0, 5.0])
    np.testing.assert_allclose(cache.s_prime(xs), np.exp(xs ** 2), rtol=1e-12)
    np.testing.assert_allclose(cache.m_prime(xs), np.exp(-xs ** 2), rtol=1e-12)


def test_normalisation_at_reference():
    op = make_operator(Interval(0, INF), "2 + x", "1 - x", "0", c=1.5)
    cache = build_scale_speed(op)
    assert cache.s_prime(1.5) == 1.0
    assert cache.m_prime(1.5) == pytest.approx(1 / 3.5, rel=1e-15)


def test_scale_and_speed_integrals():
    assert scale_integral(build_scale_speed(brownian()), 0.0, 1.0) == pytest.approx(1.0, rel=1e-12)
    cache = build_scale_speed(bessel(3.0))
    assert speed_measure(cache, 0.5, 1.0) == pytest.approx(0.234375, rel=1e-10)
    assert scale_integral(cache, 0.7, 0.7) == 0.0
    assert speed_measure(cache, 0.7, 0.7) == 0.0
    assert scale_integral(cache, 1.0, 2.0) == pytest.approx((1 - 0.25) / 2, rel=1e-10)


def test_integral_range_is_checked():
    cache = build_scale_speed(bessel(3.0))
    with pytest.raises(ValueError):
        scale_integral(cache, 2.0, 1.0)


def test_overflowing_drift_integral_fails():
    op = make_operator(Interval(0, INF), "1", "exp(pow(x, 2))", "0", c=1.0)
    cache = build_scale_speed(op)
    with pytest.raises(QuadratureFailure):
        cache.s_prime(40.0)


# -- properties -----------------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_identity_s_m_a(seed):
    op = smooth_operators(seed, 1)[0]
    cache = build_scale_speed(op)
    xs = op.c + np.linspace(-3, 3, 25)
    xs = xs[(xs > op.interval.x0) & (xs < op.interval.y0)]
    prod = cache.s_prime(xs) * cache.m_prime(xs) * op.a(xs)
    np.testing.assert_allclose(prod, 1.0, rtol=1e-12)
    assert np.all(cache.s_prime(xs) > 0) and np.all(cache.m_prime(xs) > 0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 3.0))
def test_change_of_reference_rescales_densities(seed, c2):
    op = smooth_operators(seed, 1)[0]
    if op.interval.x0 != 0.0:
        c2 -= 1.5  # whole-line operator: move the reference across zero too
    op2 = op.with_reference(c2)
    k1, k2 = build_scale_speed(op), build_scale_speed(op2)
    xs = np.array([0.3, 0.9, 1.7, 2.5]) if op.interval.x0 == 0.0 else np.array([-1.2, -0.1, 0.8, 2.0])
    ratio_s = k2.s_prime(xs) / k1.s_prime(xs)
    ratio_m = k2.m_prime(xs) / k1.m_prime(xs)
    np.testing.assert_allclose(ratio_s, ratio_s[0], rtol=1e-10)
    np.testing.assert_allclose(ratio_s * ratio_m, 1.0, rtol=1e-10)
    # so every product s'(r) m'(t) is unchanged
    np.testing.assert_allclose(k2.s_prime(xs[0]) * k2.m_prime(xs[-1]),
                               k1.s_prime(xs[0]) * k1.m_prime(xs[-1]), rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.0, 4.0), st.floats(0.0, 5.0))
def test_weil_family_validates(gamma, c):
    op = weil_operator(gamma, c)
    assert op.n_probes >= 64
    cache = build_scale_speed(op)
    np.testing.assert_allclose(cache.s_prime(np.array([0.5, 2.0])), np.array([0.5, 2.0]) ** -gamma, rtol=1e-11)
