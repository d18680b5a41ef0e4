import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mellinshift.expr import ExpressionError, parse_expression


def test_doctest_example():
    w = parse_expression("0.5*sin(log(1 + log(t)**2))")
    assert float(w(1.0)) == 0.0


@pytest.mark.parametrize("src, f, df", [
    ("3", lambda t: 3 + 0 * t, lambda t: 0 * t),
    ("-t", lambda t: -t, lambda t: -1 + 0 * t),
    ("arctan(log(t))", lambda t: np.arctan(np.log(t)), lambda t: 1 / (t * (1 + np.log(t) ** 2))),
    ("sin(log(1 + abs(log(t))))", lambda t: np.sin(np.log(1 + np.abs(np.log(t)))),
     lambda t: np.cos(np.log(1 + np.abs(np.log(t)))) * np.sign(np.log(t)) / (t * (1 + np.abs(np.log(t))))),
    ("exp(-t)*cos(pi*t)/sqrt(t)", lambda t: np.exp(-t) * np.cos(np.pi * t) / np.sqrt(t), None),
    ("tanh(log(t)) + e", lambda t: np.tanh(np.log(t)) + np.e, lambda t: (1 - np.tanh(np.log(t)) ** 2) / t),
])
def test_values_and_derivatives(src, f, df):
    t = np.geomspace(1e-3, 1e3, 37)
    t = t[np.abs(np.log(t)) > 1e-9]
    e = parse_expression(src)
    np.testing.assert_allclose(e(t), f(t), rtol=1e-13, atol=1e-15)
    if df is not None:
        np.testing.assert_allclose(e.diff(t), df(t), rtol=1e-12, atol=1e-15)


@given(st.floats(-8, 8))
def test_derivative_matches_finite_difference(u):
    e = parse_expression("0.7*sin(0.4*log(1 + log(t)**2)) + 0.1*arctan(log(t))")
    t = np.exp(u)
    step = 1e-6
    fd = (e(np.exp(u + step)) - e(np.exp(u - step))) / (2 * step)
    assert abs(t * e.diff(t) - fd) < 1e-8


def test_constant_detection_and_shapes():
    c = parse_expression("2*pi")
    assert c.is_constant
    out = c(np.ones((3, 2)))
    assert out.shape == (3, 2)
    assert np.all(out == 2 * np.pi)
    assert np.all(c.diff(np.ones(4)) == 0)
    assert not parse_expression("log(t)").is_constant
    assert np.ndim(parse_expression("t")(2.0)) == 0


@pytest.mark.parametrize("src", [
    "", "   ", "t +", "__import__('os')", "t.real", "x + 1", "foo(t)", "sin(t, t)",
    "sin(t=1)", "[t]", "t if t else 1", "'t'", "True", "t % 2", "lambda: t",
])
def test_rejects_bad_input(src):
    with pytest.raises(ExpressionError):
        parse_expression(src)


def test_rejects_non_string():
    with pytest.raises(ExpressionError):
        parse_expression(3)
