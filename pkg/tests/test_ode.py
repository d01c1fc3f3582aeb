import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sturm_uniq.ode import (
    feller_solution, l1m_integrability, ode_no_entrance, riccati_residual, sandwich_crosscheck,
)
from sturm_uniq.operator import Interval, Side, make_operator
from sturm_uniq.quadrature import Outcome
from sturm_uniq.random_ops import quartile_checkpoints, smooth_operators, weil_operator
from sturm_uniq.series import v0_fast_test

INF = math.inf


def brownian():
    return make_operator(Interval(-INF, INF), "1", "0", "0", c=0.0)


def test_brownian_trace_is_log_cosh():
    tr = feller_solution(brownian(), 1.0, Side.UPPER, depth=4)
    x = tr.x
    sel = x < 15
    np.testing.assert_allclose(tr.L[sel], np.log(np.cosh(x[sel])), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(tr.w[sel], np.tanh(x[sel]), rtol=1e-8, atol=1e-12)


def test_trace_starts_at_zero():
    tr = feller_solution(weil_operator(0.5, 1.0), 1.0, Side.LOWER, depth=6)
    assert tr.t[0, 0] == 0.0
    assert tr.L[0, 0] == 0.0
    assert tr.w[0, 0] == 0.0


def test_lower_side_of_symmetric_operator():
    tr = feller_solution(brownian(), 4.0, Side.LOWER, depth=3)
    sel = tr.x > -5
    np.testing.assert_allclose(tr.L[sel], np.log(np.cosh(2 * tr.x[sel])), rtol=1e-9, atol=1e-12)


def test_trace_survives_past_double_overflow():
    # cosh overflows near 710 but log cosh is carried without trouble
    tr = feller_solution(brownian(), 1.0, Side.UPPER, depth=11)
    assert tr.x.max() > 1000
    assert tr.log_h_at(1000.0) == pytest.approx(1000.0 - math.log(2.0), rel=1e-9)


def test_riccati_residual_is_small():
    for op, side in [(brownian(), Side.UPPER), (weil_operator(1.0, 3.0), Side.LOWER)]:
        assert riccati_residual(feller_solution(op, 1.0, side, depth=8)) < 1e-6


def test_l1m_brownian_diverges():
    tr = feller_solution(brownian(), 1.0, Side.UPPER, depth=12)
    assert l1m_integrability(tr).outcome is Outcome.DIVERGES


def test_weil_threshold_harmonic_diverges():
    # h(x) = 1/x is the harmonic function of f'' - 2/x^2 f; ∫_0 h dx diverges
    assert ode_no_entrance(weil_operator(0.0, 2.0), side=Side.LOWER).outcome is Outcome.DIVERGES


def test_finite_speed_measure_converges_below_exponential_bound():
    op = make_operator(Interval(0.0, INF), "1", "3/x", "0", c=1.0)
    v = ode_no_entrance(op, 1.0, Side.LOWER)
    assert v.outcome is Outcome.CONVERGES
    assert v.limit <= 0.25 * math.exp(1 / 8) * (1 + 1e-6)


@pytest.mark.parametrize("delta", [1.0, 0.1, 0.01])
def test_small_delta_matches_v0_fast_path(delta):
    for op in [brownian(), make_operator(Interval(-INF, INF), "1", "-3*sgn(x)*pow(x, 2)", "0", c=0.0)]:
        fast = v0_fast_test(op, Side.UPPER).outcome
        assert ode_no_entrance(op, delta, Side.UPPER).outcome is fast


def test_sandwich_brownian():
    rep = sandwich_crosscheck(brownian(), 1.0, Side.UPPER, [0.0, 0.5, 1.0])
    assert rep.ok
    assert rep.max_discrepancy <= 1e-6
    y, series, ode, disc = rep.rows[0]
    assert (series, ode, disc) == (1.0, 1.0, 0.0)
    assert rep.rows[2][1] == pytest.approx(math.cosh(1.0), rel=1e-10)


# -- properties -------------------------------------------------------------------------

@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_upper_trace_is_increasing(seed):
    op = smooth_operators(seed, 1)[0]
    tr = feller_solution(op, 1.0, Side.UPPER, depth=5)
    assert np.all(tr.w >= -1e-12)
    L = tr.L.ravel()
    assert np.all(np.diff(L) >= -1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_random_operator_residual_and_sandwich(seed):
    op = smooth_operators(seed, 1)[0]
    side = op.open_sides()[-1]
    assert riccati_residual(feller_solution(op, 1.0, side, depth=5)) < 1e-5
    rep = sandwich_crosscheck(op, 1.0, side, quartile_checkpoints(op, side))
    assert rep.max_discrepancy <= 1e-5
