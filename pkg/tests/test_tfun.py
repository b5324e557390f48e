import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilie import tfun
from quasilie.tfun import NonMonotone, ParseError, TimeFn, build_monotone, cumint, integral, reparametrize


@pytest.mark.parametrize("src,deriv", [
    ("t^3", "3*t^2"),
    ("exp(2*t)", "2*exp(2*t)"),
])
def test_symbolic_derivative_text(src, deriv):
    assert TimeFn.parse(src).derivative().source() == deriv


def test_parse_error_offset():
    with pytest.raises(ParseError) as e:
        tfun.parse_expr("2 +")
    assert e.value.offset == 3
    with pytest.raises(ParseError):
        tfun.parse_expr("foo(t)")


def test_constants_and_pi():
    assert TimeFn.parse("2/3").constant_value() == tfun.Fraction(2, 3)
    assert TimeFn.parse("sin(pi/2)")(0.0) == pytest.approx(1.0)


def test_source_round_trip():
    for src in ("-2*exp(sin(t))", "(1 + t/3)^(1/3)", "t^-2 + log(1 + t^2)", "cos(t)/(2 - sin(t))"):
        f = TimeFn.parse(src)
        g = TimeFn.parse(f.source())
        for t in (0.1, 0.7, 1.3):
            assert g(t) == pytest.approx(f(t), rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["sin(t)*exp(t/2)", "t^3 - 2*t", "log(2 + cos(t))", "(1 + t^2)^(1/2)", "1/(3 + t)"]),
       st.floats(0.1, 2.0))
def test_derivative_matches_central_difference(src, t):
    f = TimeFn.parse(src)
    h = 1e-5
    fd = (f(t + h) - f(t - h)) / (2 * h)
    assert f.deriv(t) == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_integral_of_exponential():
    f = TimeFn.parse("exp(t)")
    assert cumint(f, 1.0) == pytest.approx(math.e - 1, abs=1e-12)
    F = integral(f, (0.0, 2.0))
    assert F(1.5) == pytest.approx(math.exp(1.5) - 1, abs=1e-11)
    assert F.deriv(0.5) == pytest.approx(math.exp(0.5), rel=1e-14)


def test_integral_of_constant_stays_closed_form():
    F = integral(TimeFn.const(3), (0.0, 1.0))
    assert F.closed_form and F(2.0) == 6.0


def test_monotone_map_and_inverse():
    m = build_monotone(TimeFn.parse("exp(t)"), (0.0, 2.0))
    assert m(1.0) == pytest.approx(math.e - 1, abs=1e-10)
    for tau in (0.2, 1.0, 3.0):
        assert m(m.inverse(tau)) == pytest.approx(tau, abs=1e-10)


def test_nonmonotone_rejected():
    with pytest.raises(NonMonotone):
        build_monotone(TimeFn.parse("sin(t)"), (0.0, 4.0))


def test_reparametrized_derivative():
    m = build_monotone(TimeFn.parse("1 + t"), (0.0, 1.0))
    f = reparametrize(TimeFn.parse("t^2"), m)
    # tau = t + t^2/2, so t(tau) = sqrt(1 + 2 tau) - 1 and f = t(tau)^2
    for tau in np.linspace(0.05, 1.4, 5):
        t = math.sqrt(1 + 2 * tau) - 1
        assert f(tau) == pytest.approx(t * t, abs=1e-10)
        assert f.deriv(tau) == pytest.approx(2 * t / (1 + t), abs=1e-9)


def test_identically_zero():
    assert tfun.identically_zero(TimeFn.parse("sin(t)^2 + cos(t)^2 - 1"), (0.0, 3.0))
    assert not tfun.identically_zero(TimeFn.parse("t*1e-6"), (0.0, 3.0))
