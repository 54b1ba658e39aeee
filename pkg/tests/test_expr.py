from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonflow import expr as ex
from solitonflow.expr import BinOp, Call, Const, EvalContext, Neg, Param, Var


def test_paraboloid_h_ast():
    e = ex.parse("(n−1)/s")
    assert e.ast == BinOp("/", BinOp("-", Param("n"), Const(1.0)), Var())


def test_power_evaluates():
    assert ex.evaluate(ex.parse("2^3"), EvalContext(0.0)) == 8.0


def test_power_is_right_associative():
    assert ex.evaluate(ex.parse("2^3^2"), EvalContext(0.0)) == 512.0


def test_unary_minus_binds_looser_than_power():
    assert ex.evaluate(ex.parse("-2^2"), EvalContext(0.0)) == -4.0
    assert ex.evaluate(ex.parse("2^-1"), EvalContext(0.0)) == 0.5


def test_unbalanced_paren_offset():
    with pytest.raises(ex.ParseError) as info:
        ex.parse("tan(s")
    assert info.value.offset == 5
    assert "offset 5" in str(info.value)


def test_offset_counts_utf8_bytes():
    with pytest.raises(ex.ParseError) as info:
        ex.parse("n−1)")
    # U+2212 occupies three bytes
    assert info.value.offset == 5


@pytest.mark.parametrize("text, exc", [
    ("foo(s)", ex.UnknownFunctionError),
    ("s + k", ex.UnknownIdentifierError),
    ("", ex.ParseError),
    ("sin", ex.ParseError),
    ("1 +", ex.ParseError),
    ("2 $ 3", ex.ParseError),
])
def test_parse_errors(text, exc):
    with pytest.raises(exc):
        ex.parse(text)


def test_declared_parameter_resolves():
    e = ex.parse("k*s", params=("k",))
    assert e.bind({"k": 3.0})(2.0) == 6.0


def test_unbound_parameter():
    with pytest.raises(ex.UnboundIdentifierError):
        ex.evaluate(ex.parse("(n-1)/s"), EvalContext(1.0))


def test_eval_examples():
    assert ex.evaluate(ex.parse("(n−1)/s"), EvalContext(2.0, {"n": 3})) == 1.0
    v = ex.evaluate(ex.parse("(1−n)*tan(s)"), EvalContext(math.pi / 4, {"n": 2}))
    assert v == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("text, s", [
    ("1/s", 0.0), ("ln(s)", -1.0), ("ln(s)", 0.0), ("sqrt(s)", -1.0), ("coth(s)", 0.0),
    ("s^0.5", -1.0),
])
def test_domain_errors(text, s):
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse(text), EvalContext(s))


def test_overflow_is_eval_error():
    with pytest.raises(ex.EvalError):
        ex.evaluate(ex.parse("exp(s)"), EvalContext(1000.0))


def test_all_functions_evaluate():
    for name, ref in [("sin", math.sin), ("cos", math.cos), ("tan", math.tan), ("ln", math.log),
                      ("exp", math.exp), ("sqrt", math.sqrt), ("abs", abs), ("atan", math.atan),
                      ("sinh", math.sinh), ("cosh", math.cosh), ("tanh", math.tanh)]:
        assert ex.evaluate(ex.parse(f"{name}(s)"), EvalContext(0.7)) == pytest.approx(ref(0.7))
    assert ex.evaluate(ex.parse("coth(s)"), EvalContext(0.7)) == pytest.approx(1 / math.tanh(0.7))


def test_derivative_examples():
    assert ex.derivative_num(ex.parse("s^2"), EvalContext(3.0)) == pytest.approx(6.0, abs=1e-6)
    q = ex.parse("s/(n−1)")
    assert ex.derivative_num(q, EvalContext(0.0, {"n": 3}), one_sided="+") == \
        pytest.approx(0.5, abs=1e-6)
    cot = ex.parse("1/((n−1)*tan(s))")
    assert ex.derivative_num(cot, EvalContext(math.pi / 3, {"n": 2})) == \
        pytest.approx(-4 / 3, abs=1e-6)


def test_one_sided_never_touches_the_point():
    # 1/s is undefined at 0, but s*s/s style functions can still be differentiated from the right
    e = ex.parse("s^2/s")
    assert ex.derivative_num(e, EvalContext(0.0), one_sided="+") == pytest.approx(1.0, abs=1e-9)
    assert ex.derivative_num(e, EvalContext(0.0), one_sided="-") == pytest.approx(1.0, abs=1e-9)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-50, 50))
def test_derivative_exact_on_quadratics(a, b, c, s):
    fn = lambda x: a * x * x + b * x + c
    exact = 2 * a * s + b
    scale = max(1.0, abs(exact), abs(a) * s * s)
    for side in (None, "+", "-"):
        got = ex.derivative_num(fn, EvalContext(s), one_sided=side)
        assert abs(got - exact) <= 1e-9 * scale * max(1.0, abs(s))


leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False).map(Const),
    st.just(Var()),
    st.just(Param("n")),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(sorted(ex.FUNCTIONS)), children).map(lambda t: Call(*t)),
    )


asts = st.recursive(leaves, _extend, max_leaves=12)


@settings(max_examples=300)
@given(asts)
def test_print_parse_round_trip(node):
    text = ex.to_text(node)
    reparsed = ex.parse(text).ast
    assert reparsed == node
    assert ex.parse(ex.to_text(reparsed)).ast == reparsed


@given(st.floats(-5, 5))
def test_eval_is_deterministic(s):
    f = ex.parse("sin(s)^2 + cos(s)*n").bind({"n": 2})
    assert f(s) == f(s)
