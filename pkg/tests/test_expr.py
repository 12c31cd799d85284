import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from direach import expr as ex
from direach.exceptions import DimensionError, ParseError
from direach.interval import Interval
from direach.taylor import TaylorModel

NAMES = ["x", "y", "z"]


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        if draw(st.booleans()):
            return ex.var(draw(st.integers(0, 2)))
        num = draw(st.integers(-9, 9))
        den = draw(st.sampled_from([1, 2, 4, 10]))
        return ex.const(Fraction(num, den))
    op = draw(st.sampled_from(["add", "sub", "mul", "neg", "pow", "sin", "cos", "exp"]))
    a = draw(expressions(depth=depth - 1))
    if op == "neg":
        return -a
    if op == "pow":
        return a ** draw(st.integers(0, 3))
    if op in ("sin", "cos", "exp"):
        return getattr(ex, op)(a)
    b = draw(expressions(depth=depth - 1))
    return {"add": a + b, "sub": a - b, "mul": a * b}[op]


def moderate(e, radius=2.0):
    # skip towers like exp(exp(exp(2))) whose values leave float range
    r = ex.eval_interval(e, [Interval(-radius, radius)] * 3)
    return max(abs(r.lo), abs(r.hi)) < 1e8


points = st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3)


@given(expressions())
def test_print_parse_round_trip(e):
    text = ex.to_string(e, NAMES)
    back = ex.parse(text, NAMES)
    assert ex.to_string(back, NAMES) == text


@given(expressions(), points)
def test_round_trip_preserves_value(e, x):
    back = ex.parse(ex.to_string(e, NAMES), NAMES)
    assert ex.eval_float(back, x) == pytest.approx(ex.eval_float(e, x), rel=1e-12, abs=1e-12)


def test_decimal_literals_are_exact():
    e = ex.parse("0.1", [])
    assert e.payload == Fraction(1, 10)
    assert ex.parse("1e-3", []).payload == Fraction(1, 1000)


def test_precedence_and_associativity():
    x = [2.0, 3.0, 5.0]
    assert ex.eval_float(ex.parse("x - y - z", NAMES), x) == -6.0
    assert ex.eval_float(ex.parse("x / y / z", NAMES), x) == pytest.approx(2 / 15)
    assert ex.eval_float(ex.parse("-x^2", NAMES), x) == -4.0
    assert ex.eval_float(ex.parse("x*y + z", NAMES), x) == 11.0


@pytest.mark.parametrize("text,col", [
    ("x + ", 5),
    ("x + w", 5),
    ("x ^ y", 5),
    ("(x + y", 7),
    ("x $ y", 3),
])
def test_parse_errors_carry_position(text, col):
    with pytest.raises(ParseError) as info:
        ex.parse(text, NAMES, line=4)
    assert info.value.line == 4
    assert info.value.column == col


@given(expressions(), points, st.integers(0, 2))
@settings(max_examples=60)
def test_derivative_matches_central_difference(e, x, i):
    assume(moderate(e))
    d = ex.diff(e, i)
    step = 1e-6
    xp, xm = list(x), list(x)
    xp[i] += step
    xm[i] -= step
    fd = (ex.eval_float(e, xp) - ex.eval_float(e, xm)) / (2 * step)
    exact = ex.eval_float(d, x)
    assert fd == pytest.approx(exact, rel=1e-4, abs=1e-4 * (1 + abs(exact)))


def test_symbolic_jacobian_shape():
    f = [ex.parse(s, NAMES) for s in ("x*y", "sin(z)", "x^3")]
    J = ex.symbolic_jacobian(f, 3)
    assert len(J) == 3 and all(len(r) == 3 for r in J)
    assert ex.to_string(J[2][0], NAMES) == "3*x^2"
    assert J[1][0].is_zero()


@given(expressions(), st.lists(st.tuples(st.floats(-1, 1), st.floats(0, 0.5)), min_size=3, max_size=3))
@settings(max_examples=80)
def test_interval_evaluation_encloses_samples(e, spec):
    box = [Interval(c, c + w) for c, w in spec]
    r = ex.eval_interval(e, box)
    for t in (0.0, 0.3, 1.0):
        v = ex.eval_float(e, [c + t * w for c, w in spec])
        assert r.lo - 1e-9 * (1 + abs(v)) <= v <= r.hi + 1e-9 * (1 + abs(v))


def test_interval_evaluation_dimension_checked():
    with pytest.raises(DimensionError):
        ex.eval_interval(ex.var(2), [Interval(0.0, 1.0)])


@given(expressions(depth=2), points)
@settings(max_examples=60)
def test_taylor_model_evaluation_encloses(e, x):
    assume(moderate(e))
    # argument models x_i = c_i + 0.1 s_i over s in [-1, 1]^3
    args = [TaylorModel.variable(i, 3).scale(0.1).add_constant(x[i]) for i in range(3)]
    tm = ex.eval_taylor_model(e, args)
    r = tm.bound()
    for s in ([-1, -1, -1], [0.2, -0.7, 1.0], [1, 1, 1]):
        v = ex.eval_float(e, [x[i] + 0.1 * s[i] for i in range(3)])
        assert r.lo - 1e-9 * (1 + abs(v)) <= v <= r.hi + 1e-9 * (1 + abs(v))


def test_compile_numpy_vectorises():
    f = [ex.parse(s, NAMES) for s in ("x*y - z", "exp(x) + cos(y)", "2")]
    fn = ex.compile_numpy(f, 3)
    X = np.array([[0.0, 1.0], [2.0, -1.0], [3.0, 0.5]])
    out = fn(X)
    assert out.shape == (3, 2)
    np.testing.assert_allclose(out[0], [-3.0, -1.5])
    np.testing.assert_allclose(out[1], [1 + math.cos(2.0), math.e + math.cos(-1.0)])
    np.testing.assert_allclose(out[2], [2.0, 2.0])


def test_split_top_level_respects_parentheses():
    parts = ex.split_top_level("x, f(y, z), [1, 2]")
    assert [p.strip() for p, _ in parts] == ["x", "f(y, z)", "[1, 2]"]
    assert parts[1][1] == 2
