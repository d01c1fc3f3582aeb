import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sturm_uniq.classifier import power_law_flip
from sturm_uniq.errors import TruncationBudgetExceeded
from sturm_uniq.operator import Interval, Side, make_operator
from sturm_uniq.quadrature import Outcome
from sturm_uniq.random_ops import smooth_operators, weil_operator
from sturm_uniq.series import (
    compute_series, feller_classical_entrance, iter_integral, no_entrance_test, series_sum, series_verdict,
    v0_fast_test,
)

INF = math.inf


def brownian():
    return make_operator(Interval(-INF, INF), "1", "0", "0", c=0.0)


def bessel(gamma):
    return make_operator(Interval(0.0, INF), "1", f"{gamma}/x", "0", c=1.0)


def inward_drift(gamma=-1.0, alpha=3.0, V="0"):
    b = f"{gamma * alpha}*sgn(x)*pow(abs(x), {alpha - 1})"
    return make_operator(Interval(-INF, INF), "1", b, V, c=0.0)


# -- iterated integrals ----------------------------------------------------------------

def test_zeroth_term_is_one():
    for op, y in [(brownian(), 3.0), (weil_operator(0.5, 2.0), 0.2)]:
        assert iter_integral(op, 1.0, Side.UPPER if y > op.c else Side.LOWER, 0, y) == 1.0


@pytest.mark.parametrize("n, y, expected", [(2, 1.0, 1 / 24), (1, 2.0, 2.0), (3, 1.5, 1.5 ** 6 / 720)])
def test_brownian_iterated_integrals(n, y, expected):
    assert iter_integral(brownian(), 1.0, Side.UPPER, n, y) == pytest.approx(expected, rel=1e-10)


def test_lower_side_mirrors_upper_for_symmetric_operator():
    op = brownian()
    assert iter_integral(op, 1.0, Side.LOWER, 2, -1.0) == pytest.approx(1 / 24, rel=1e-10)


def test_terms_vanish_at_reference():
    assert iter_integral(brownian(), 1.0, Side.UPPER, 3, 0.0) == 0.0


def test_point_outside_side_is_rejected():
    with pytest.raises(ValueError):
        iter_integral(brownian(), 1.0, Side.UPPER, 1, -1.0)


# -- series sum -----------------------------------------------------------------------

@pytest.mark.parametrize("delta, y", [(1.0, 1.0), (4.0, 1.0), (1.0, 0.5), (4.0, 2.0)])
def test_brownian_cosh(delta, y):
    assert series_sum(brownian(), delta, y) == pytest.approx(math.cosh(math.sqrt(delta) * y), rel=1e-10)


def test_series_at_reference_is_one():
    assert series_sum(weil_operator(0.0, 1.0), 1.0, 1.0) == 1.0


def test_truncation_budget_is_reported():
    with pytest.raises(TruncationBudgetExceeded) as info:
        series_sum(brownian(), 1.0, 30.0, n_max=5)
    assert info.value.partial_sum <= math.cosh(30.0)


def test_series_state_invariants():
    op = weil_operator(0.3, 1.5)
    st_ = compute_series(op, 1.0, Side.LOWER, depth=20)
    terms = np.array(st_.log_terms)  # log I_n at panel breaks
    assert np.all(terms[0] == 0.0)  # I_0 = 1
    assert np.all(terms[1:, 0] == -np.inf)  # I_n(c) = 0 for n >= 1
    assert np.all(np.diff(terms[1:], axis=1) >= -1e-12)  # nondecreasing toward the boundary


# -- no-entrance tests ------------------------------------------------------------------

def test_brownian_upper_is_no_entrance():
    assert no_entrance_test(brownian(), side=Side.UPPER).outcome is Outcome.DIVERGES


def test_weil_threshold_is_no_entrance():
    v = no_entrance_test(weil_operator(0.0, 2.0), side=Side.LOWER)
    assert v.outcome is Outcome.DIVERGES


def test_weil_below_threshold_is_entrance():
    v = no_entrance_test(weil_operator(0.0, 1.0), side=Side.LOWER)
    assert v.outcome is Outcome.CONVERGES


def test_bessel_three_lower_converges():
    v = no_entrance_test(bessel(3.0), side=Side.LOWER)
    assert v.outcome is Outcome.CONVERGES
    assert v.growth_diagnostic.get("delegated") == "v0_fast_test"


def test_v0_fast_path_values():
    assert v0_fast_test(brownian(), Side.UPPER).outcome is Outcome.DIVERGES
    v = v0_fast_test(bessel(3.0), Side.LOWER)
    assert v.outcome is Outcome.CONVERGES
    assert v.limit == pytest.approx(1 / 8, rel=1e-6)


def test_cubic_inward_drift_is_entrance_at_infinity():
    v = v0_fast_test(inward_drift(), Side.UPPER)
    assert v.outcome is Outcome.CONVERGES


def test_feller_classical_examples():
    v = feller_classical_entrance(bessel(3.0), Side.LOWER)
    assert v.outcome is Outcome.CONVERGES
    assert v.limit == pytest.approx(1 / 8, rel=1e-6)
    assert feller_classical_entrance(brownian(), Side.UPPER).outcome is Outcome.DIVERGES


def test_classical_entrance_is_strictly_weaker_with_killing():
    op = weil_operator(0.0, 1.0)
    assert feller_classical_entrance(op, Side.LOWER).outcome is Outcome.DIVERGES
    assert no_entrance_test(op, side=Side.LOWER).outcome is Outcome.CONVERGES


def test_exponential_bound_with_finite_speed_measure():
    # V = 0, m(y0) finite: the sum is dominated by m(y0) exp(∫ m' ∫ s')
    st_ = compute_series(bessel(3.0), 1.0, Side.LOWER, n_max=1024)
    v = series_verdict(st_, 1.0)
    assert v.outcome is Outcome.CONVERGES
    m_total = 0.25  # ∫_0^1 t^3 dt
    assert v.limit <= m_total * math.exp(1 / 8) * (1 + 1e-6)


@pytest.mark.parametrize("delta", [0.1, 1.0, 10.0])
def test_delta_does_not_change_the_verdict(delta):
    assert no_entrance_test(weil_operator(0.0, 3.0), delta, Side.LOWER).outcome is Outcome.DIVERGES
    assert no_entrance_test(weil_operator(0.0, 1.0), delta, Side.LOWER).outcome is Outcome.CONVERGES


# -- properties -------------------------------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0))
def test_monotone_in_the_potential(seed, extra):
    op = smooth_operators(seed, 1)[0]
    bigger = op.with_potential(f"{op.V.source} + {extra!r}*exp(-abs(x))")
    side = Side.UPPER
    s1 = compute_series(op, 1.0, side, t_end=2.0, depth=4, n_terms=6)
    s2 = compute_series(bigger, 1.0, side, t_end=2.0, depth=4, n_terms=6)
    # compare on the common break points
    t1, t2 = s1.grid.breaks, s2.grid.breaks
    common = np.intersect1d(t1, t2)
    for n in range(1, 6):
        a = s1.log_terms[n][np.searchsorted(t1, common)]
        b = s2.log_terms[n][np.searchsorted(t2, common)]
        assert np.all(a <= b + 1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.3, 6.0), st.floats(0.3, 3.0))
def test_verdict_does_not_depend_on_reference(gamma, c, ref):
    if abs(c - power_law_flip(1.0, gamma)) < 0.3:
        c += 0.6  # stay clear of the flip
    op1 = weil_operator(gamma, c, ref=1.0)
    op2 = weil_operator(gamma, c, ref=ref)
    v1 = no_entrance_test(op1, side=Side.LOWER).outcome
    v2 = no_entrance_test(op2, side=Side.LOWER).outcome
    assert v1 == v2
