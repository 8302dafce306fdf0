import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from capbraid.hamparse import (
    ParseError,
    differentiate,
    evaluate,
    free_variables,
    make_hamiltonian,
    parse_expr,
    shifted,
    time_reversed,
    to_text,
)


def test_product_of_sines_at_quarter_point():
    e = parse_expr("sin(2*pi*x)*sin(2*pi*y)")
    assert evaluate(e, x=0.25, y=0.25) == pytest.approx(1.0)


@pytest.mark.parametrize("text,pos", [("x*", 2), ("x + + y", 4), ("sin(x", 5), ("3 $ x", 2)])
def test_syntax_errors_report_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse_expr(text)
    assert info.value.position == pos


def test_derivative_of_product():
    assert to_text(differentiate(parse_expr("x*y"), "x")) == "y"


def test_chain_rule_value():
    d = differentiate(parse_expr("sin(2*pi*x)"), "x")
    assert evaluate(d, x=0.0) == pytest.approx(2 * np.pi)
    assert evaluate(d, x=0.3) == pytest.approx(2 * np.pi * np.cos(2 * np.pi * 0.3))


def test_time_derivative_of_autonomous_expression_is_zero():
    d = differentiate(parse_expr("exp(x)*cos(y) + x^3"), "t")
    assert evaluate(d, t=0.7, x=0.2, y=0.1) == 0.0


def test_power_and_precedence():
    assert evaluate(parse_expr("-x^2"), x=3.0) == -9.0
    assert evaluate(parse_expr("(2^3)^2")) == 64.0
    assert evaluate(parse_expr("x^-2"), x=2.0) == 0.25
    with pytest.raises(ParseError):
        parse_expr("x^y")
    assert evaluate(parse_expr("1 - 2 - 3")) == -4.0
    assert evaluate(parse_expr("8/2/2")) == 2.0


def test_vectorized_evaluation():
    x = np.linspace(0, 1, 7)
    v = evaluate(parse_expr("cos(2*pi*x) + t"), t=0.5, x=x)
    assert np.allclose(v, np.cos(2 * np.pi * x) + 0.5)


def test_free_variables():
    assert free_variables(parse_expr("sin(t)*x + pi")) == frozenset({"t", "x"})


def test_sphere_single_expression_builds_south_chart(sphere):
    H = make_hamiltonian(sphere, "x")
    # north chart x at z = (0.5, 0) is the same point as south w = (2, 0)
    assert H.chart("S").H(0.0, 2.0, 0.0) == pytest.approx(0.5)


def test_disagreeing_chart_tables_rejected(sphere):
    with pytest.raises(ValueError):
        make_hamiltonian(sphere, {"north": "x", "south": "y"})


def test_time_reversal_and_shift(torus):
    H = make_hamiltonian(torus, "x*t")
    Ht = time_reversed(H)
    assert Ht.chart("T").H(0.25, 2.0, 0.0) == pytest.approx(-2.0 * 0.75)
    Hs = shifted(H, "0.1 + t")
    assert Hs.chart("T").H(0.5, 2.0, 0.0) == pytest.approx(1.0 + 0.6)
    assert not H.autonomous
    assert make_hamiltonian(torus, "x").autonomous


leaves = st.one_of(
    st.sampled_from(["x", "y", "t", "pi"]),
    st.integers(0, 9).map(str),
    st.floats(0.1, 5.0).map(lambda v: f"{v:.3f}"),
)


def _compose(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*"), children).map(lambda p: f"({p[0]} {p[1]} {p[2]})"),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(lambda p: f"{p[0]}({p[1]})"),
        st.tuples(children, st.integers(0, 3)).map(lambda p: f"({p[0]})^{p[1]}"),
        children.map(lambda c: f"-{c}"),
    )


expressions = st.recursive(leaves, _compose, max_leaves=8)
points = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))


@settings(max_examples=200, deadline=None)
@given(expressions, points)
def test_printed_expression_reparses_to_same_value(text, p):
    t, x, y = p
    e = parse_expr(text)
    again = parse_expr(to_text(e))
    assert evaluate(again, t, x, y) == pytest.approx(evaluate(e, t, x, y), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(expressions, points, st.sampled_from(["t", "x", "y"]))
def test_derivative_matches_finite_difference(text, p, var):
    e = parse_expr(text)
    d = differentiate(e, var)
    h = 1e-6
    plus = dict(zip("txy", p))
    minus = dict(plus)
    plus[var] += h
    minus[var] -= h
    fd = (evaluate(e, **plus) - evaluate(e, **minus)) / (2 * h)
    exact = evaluate(d, *p)
    assume(abs(exact) < 1e4)
    assert fd == pytest.approx(exact, rel=1e-4, abs=1e-4 * (1 + abs(evaluate(e, *p))))
