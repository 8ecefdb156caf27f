import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from absubdiff.errors import ConfigError, ExprEvalError, ExprSyntaxError, UnknownIdentifierError
from absubdiff.expr import (
    FUNCTIONS,
    BinOp,
    Call,
    CompiledExpr,
    Const,
    Neg,
    Num,
    Var,
    eval_expr,
    evaluate,
    parse_expr,
    to_source,
    variables_of,
)


def ev(src, **env):
    return eval_expr(parse_expr(src), **env)


@pytest.mark.parametrize(
    "src, env, expected",
    [
        ("2+3*4", {}, 14.0),
        ("2+3*4", {"x": 7.0, "t": -1.0, "u": 3.0}, 14.0),
        ("4*x*(1-x)", {"x": 0.5}, 1.0),
        ("-u^3", {"u": 2.0}, -8.0),
        ("x*t", {"x": 0.5, "t": 2.0}, 1.0),
        ("2^3^2", {}, 512.0),
        ("-2^2", {}, -4.0),
        ("2^-1", {}, 0.5),
        ("8/4/2", {}, 1.0),
        ("1-2-3", {}, -4.0),
        ("--3", {}, 3.0),
        ("+x", {"x": 1.5}, 1.5),
        ("abs(-3) + sqrt(16) + exp(0) + cos(0)", {}, 9.0),
        (" 1.5e2 + .5 ", {}, 150.5),
    ],
)
def test_evaluation(src, env, expected):
    assert ev(src, **env) == expected


def test_sine_of_pi():
    assert abs(ev("sin(pi)")) <= 1e-15


@pytest.mark.parametrize(
    "src, message",
    [
        ("1/x", "division by zero"),
        ("sqrt(x - 1)", "square root"),
        ("x^-1", "division by zero"),
        ("(x-1)^0.5", "undefined power"),
        ("exp(1000)", "overflow"),
    ],
)
def test_evaluation_errors(src, message):
    with pytest.raises(ExprEvalError, match=message) as err:
        ev(src, x=0.0)
    assert isinstance(err.value, ArithmeticError)


def test_error_names_subexpression():
    with pytest.raises(ExprEvalError) as err:
        ev("1 + 2/(x - x)", x=1.0)
    assert err.value.subexpr == "2.0 / (x - x)"


@pytest.mark.parametrize(
    "src, offset",
    [
        ("1 +", 3),
        ("2 * (x", 6),
        ("x $ 2", 2),
        ("sin x", 4),
        ("1 2", 2),
        (")", 0),
        ("y + 1", 0),
        ("x + tan(x)", 4),
        ("é + x", 0),
        ("x + é", 4),
    ],
)
def test_syntax_error_offsets(src, offset):
    with pytest.raises(ExprSyntaxError) as err:
        parse_expr(src)
    assert err.value.offset == offset
    assert f"at byte {offset}" in str(err.value)
    assert isinstance(err.value, ConfigError)


def test_empty_expression():
    for src in ("", "   "):
        with pytest.raises(ExprSyntaxError):
            parse_expr(src)


def test_restricted_variables():
    with pytest.raises(UnknownIdentifierError) as err:
        parse_expr("x + u", ("x",))
    assert err.value.name == "u" and err.value.offset == 4
    assert variables_of(parse_expr("x*t + sin(u) + pi")) == {"x", "t", "u"}


def test_ast_shape():
    assert parse_expr("-x^2") == Neg(BinOp("^", Var("x"), Num(2.0)))
    assert parse_expr("sin(pi*t)") == Call("sin", BinOp("*", Const("pi"), Var("t")))


def test_printing_keeps_needed_parentheses():
    for src in ("(1 - x) * t", "2 ^ (3 ^ 2)", "(2 ^ 3) ^ 2", "x - (t - u)", "x / (t * u)", "(-x) ^ 2", "-(x ^ 2)"):
        tree = parse_expr(src)
        assert parse_expr(to_source(tree)) == tree


def test_array_evaluation_broadcasts():
    x = np.linspace(0.0, 1.0, 11)
    out = evaluate(parse_expr("4*x*(1-x) + t"), {"x": x, "t": 2.0})
    assert out.shape == (11,)
    assert out[5] == 3.0


def test_compiled_expression():
    phi = CompiledExpr("1", ("x",))
    x = np.linspace(0.0, 1.0, 5)
    assert np.array_equal(phi(x), np.ones(5))
    f = CompiledExpr("-u^3 + x*t", ("x", "t", "u"))
    assert f.uses == {"u", "x", "t"}
    assert f(np.array([0.5]), 2.0, np.array([1.0]))[0] == 0.0
    clone = pickle.loads(pickle.dumps(f))
    assert clone == f and clone.tree == f.tree
    with pytest.raises(UnknownIdentifierError):
        CompiledExpr("u", ("x",))


# --- round trip --------------------------------------------------------------

leaves = st.one_of(
    st.floats(0.0, 10.0).map(Num),
    st.just(Const("pi")),
    st.sampled_from(["x", "t", "u"]).map(Var),
)


def _extend(children):
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from(["+", "-", "*", "/", "^"]), children, children).map(lambda a: BinOp(*a)),
        st.tuples(st.sampled_from(sorted(FUNCTIONS)), children).map(lambda a: Call(*a)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
@settings(max_examples=200, deadline=None)
def test_round_trip(tree):
    again = parse_expr(to_source(tree))
    assert again == tree
    rng = np.random.default_rng(0)
    env = {name: rng.uniform(-2.0, 2.0, 100) for name in ("x", "t", "u")}
    try:
        a = evaluate(tree, env)
    except ExprEvalError:
        with pytest.raises(ExprEvalError):
            evaluate(again, env)
        return
    b = evaluate(again, env)
    both = np.isfinite(a) & np.isfinite(b)
    assert np.array_equal(np.isfinite(a), np.isfinite(b))
    assert np.all(np.abs(a[both] - b[both]) <= 1e-15 * np.maximum(1.0, np.abs(a[both])))


def test_pi_constant_value():
    assert ev("pi") == math.pi
