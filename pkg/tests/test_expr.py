import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sturm_uniq.errors import EvaluationError, ExprSyntaxError, PoleAt, UnknownIdentifier
from sturm_uniq.expr import FUNCTIONS, evaluate, parse_coefficient, to_source


def test_constant():
    e = parse_coefficient("1")
    assert e.constant == 1.0
    assert evaluate(e, 5.0) == 1.0


def test_arithmetic_examples():
    assert evaluate(parse_coefficient("0.75*pow(x,-2)"), 2.0) == pytest.approx(0.1875)
    assert evaluate(parse_coefficient("3*sgn(x)*pow(abs(x),2)"), -2.0) == pytest.approx(-12.0)
    assert evaluate(parse_coefficient("exp(-x*x)"), 0.0) == 1.0


def test_piecewise_with_parameters():
    e = parse_coefficient("piecewise(1, 0, c*pow(x, b))", {"c": 2, "b": 1})
    assert evaluate(e, 3.0) == pytest.approx(6.0)
    assert evaluate(e, 0.5) == 0.0
    np.testing.assert_allclose(e(np.array([0.5, 1.0, 3.0])), [0.0, 2.0, 6.0])


def test_power_operator_is_right_associative():
    assert evaluate(parse_coefficient("2^3^2"), 0.0) == 512.0
    assert evaluate(parse_coefficient("-x^2"), 3.0) == -9.0


def test_sgn_of_zero_is_zero():
    assert evaluate(parse_coefficient("sgn(x)"), 0.0) == 0.0


@pytest.mark.parametrize("src, x", [
    ("pow(x,-2)", 0.0),
    ("1/x", 0.0),
    ("log(x)", 0.0),
    ("log(x)", -1.0),
    ("1/(x-2)", 2.0),
])
def test_poles_raise(src, x):
    with pytest.raises(PoleAt) as info:
        evaluate(parse_coefficient(src), x)
    assert info.value.x == x


def test_pole_inside_array_reports_offending_point():
    with pytest.raises(PoleAt) as info:
        parse_coefficient("1/(x-1)")(np.array([0.0, 0.5, 1.0, 2.0]))
    assert info.value.x == 1.0


@pytest.mark.parametrize("src, x", [("sqrt(x)", -1.0), ("pow(x, 0.5)", -4.0), ("exp(x)", 1000.0)])
def test_domain_errors_are_signalled(src, x):
    with pytest.raises(EvaluationError):
        evaluate(parse_coefficient(src), x)


def test_constant_pole_reports_evaluation_point():
    with pytest.raises(PoleAt) as info:
        evaluate(parse_coefficient("x + 1/(1-1)"), 2.5)
    assert info.value.x == 2.5


@pytest.mark.parametrize("src, offset", [("1 + * 2", 4), ("(x", 2), ("pow(x)", 5), ("x x", 2), ("", 0)])
def test_syntax_errors_carry_offset(src, offset):
    with pytest.raises(ExprSyntaxError) as info:
        parse_coefficient(src)
    assert info.value.offset == offset


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(ExprSyntaxError) as info:
        parse_coefficient("1 + * 2")
    assert "number" in info.value.expected and "name" in info.value.expected


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse_coefficient("2*foo(x)")
    assert info.value.name == "foo"
    assert info.value.offset == 2


def test_non_ascii_character_is_rejected_with_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_coefficient("1 + é")
    assert info.value.offset == 4


def test_no_implicit_multiplication():
    with pytest.raises(ExprSyntaxError):
        parse_coefficient("2x")


def test_reserved_parameter_names():
    with pytest.raises(ValueError):
        parse_coefficient("x", {"exp": 1.0})


def test_constants_pi_and_e():
    assert evaluate(parse_coefficient("pi + e"), 0.0) == pytest.approx(math.pi + math.e)


def test_scalar_and_array_agree():
    e = parse_coefficient("exp(-x)*pow(x, 2) + min(x, 1) + max(x, 2)")
    xs = np.linspace(0.1, 5, 13)
    arr = e(xs)
    assert arr.shape == xs.shape
    for x, v in zip(xs, arr):
        assert evaluate(e, float(x)) == v


# -- properties ---------------------------------------------------------------

_leaf = st.one_of(
    st.just("x"),
    st.floats(min_value=0.0, max_value=50.0, allow_nan=False).map(repr),
    st.sampled_from(["pi", "e", "2", "0.5"]),
)


def _extend(children):
    unary = st.sampled_from(["exp", "abs", "sgn", "sqrt", "log"])
    binary = st.sampled_from(["pow", "min", "max"])
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/^"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"-{c}"),
        st.tuples(unary, children).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(binary, children, children).map(lambda t: f"{t[0]}({t[1]}, {t[2]})"),
        st.tuples(children, children, children).map(lambda t: f"piecewise({t[0]}, {t[1]}, {t[2]})"),
    )


sources = st.recursive(_leaf, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(sources)
def test_pretty_print_round_trip(src):
    e = parse_coefficient(src)
    again = parse_coefficient(to_source(e.ast))
    assert again.ast == e.ast
    assert parse_coefficient(e.pretty()).ast == e.ast


@settings(max_examples=200, deadline=None)
@given(sources)
def test_parsing_is_deterministic(src):
    assert parse_coefficient(src).ast == parse_coefficient(src).ast


@settings(max_examples=200, deadline=None)
@given(sources, st.lists(st.floats(min_value=-20, max_value=20, allow_nan=False), min_size=1, max_size=8))
def test_evaluation_is_pure_and_never_silently_nonfinite(src, xs):
    e = parse_coefficient(src)
    xs = np.array(xs)
    try:
        first = e(xs)
    except EvaluationError:
        with pytest.raises(EvaluationError):
            e(xs)
        return
    assert np.all(np.isfinite(first))
    np.testing.assert_array_equal(first, e(xs))


@settings(max_examples=200, deadline=None)
@given(sources, st.lists(st.floats(min_value=-20, max_value=20, allow_nan=False), min_size=2, max_size=6))
def test_array_evaluation_matches_pointwise(src, xs):
    e = parse_coefficient(src)
    try:
        arr = e(np.array(xs))
    except EvaluationError:
        return
    for x, v in zip(xs, arr):
        assert evaluate(e, x) == v


def test_function_table_covers_grammar():
    assert set(FUNCTIONS) == {"pow", "exp", "log", "abs", "sgn", "min", "max", "sqrt", "piecewise"}


def test_piecewise_with_constant_arguments_still_depends_on_x():
    e = parse_coefficient("piecewise(5, 0, -1)")
    np.testing.assert_array_equal(e(np.array([1.0, 6.0])), [0.0, -1.0])
