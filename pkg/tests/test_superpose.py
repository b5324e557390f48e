import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilie import odeint
from quasilie.models import GambierSpec, LinearLieSpec, RiccatiSpec, SecondRiccatiSpec, solve
from quasilie.superpose import (FINE, DegenerateDenominator, DegenerateSolutions, Jet, NegativeRadicand,
                                direct_deviation, easy_alpha, exact_gambier_n1, gambier_general_solution,
                                gambier_residual, linear_basis, mixed_sr, mp_from_oscillators,
                                mp_from_riccati, mp_residual, oscillator_pair, riccati_k, riccati_sr,
                                sr_residual)
from quasilie.tfun import TimeFn
from quasilie.transforms import to_ks2


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_jet_arithmetic_chain_rule(a, b, c, d):
    x = Jet(1.5, a, b)
    y = Jet(0.7, c, d)
    p = x * y
    assert p.d1 == pytest.approx(a * 0.7 + 1.5 * c)
    assert p.d2 == pytest.approx(b * 0.7 + 2 * a * c + 1.5 * d)
    r = x.recip()
    assert r.d1 == pytest.approx(-a / 1.5 ** 2)
    s = x.sqrt()
    assert (s * s).d2 == pytest.approx(b, abs=1e-12)


def test_riccati_rule_reconstructs_fourth_solution():
    ric = RiccatiSpec(1, 0, 1)
    us = [solve(ric, 0.0, (u,), 0.6) for u in (0.0, 0.3, -0.5, 0.8)]
    k = riccati_k(0.8, 0.0, 0.3, -0.5)
    for t in np.linspace(0, 0.6, 31):
        assert riccati_sr(*(u.at(t)[0] for u in us[:3]), k) == pytest.approx(us[3].at(t)[0], abs=1e-6)


def test_riccati_rule_exact_on_tangents():
    # x = tan(t + c) solves x' = 1 + x^2
    u = [math.tan(0.1 * t) for t in (0, 1, 2)]
    k = riccati_k(math.tan(0.35), *u)
    t = 0.4
    got = riccati_sr(math.tan(t), math.tan(t + 0.1), math.tan(t + 0.2), k)
    assert got == pytest.approx(math.tan(t + 0.35), rel=1e-12)


def test_mp_from_oscillators_constant_frequency():
    # omega = 1: z1 = cos, z2 = sin, W = 1
    z1, z2 = oscillator_pair(1, 1.0)
    assert z1.at(0.7)[0] == pytest.approx(math.cos(0.7), abs=1e-10)
    y = mp_from_oscillators(z1, z2, 1.0, 1.0, 1, 1.0)
    assert y.W == pytest.approx(1.0)
    for tau in np.linspace(0, 1, 21):
        assert abs(mp_residual(y, 1, 0.25, tau)) <= 1e-6


def test_mp_from_oscillators_variable_frequency():
    om = TimeFn.parse("1 + t/2")
    z1, z2 = oscillator_pair(om, 1.0)
    y = mp_from_oscillators(z1, z2, 1.0, 0.5, 1, 1.5)
    assert max(abs(mp_residual(y, om, 1.5 ** 2 / 4, t)) for t in np.linspace(0, 1, 101)) <= 1e-6


def test_negative_radicand_detected():
    z1, z2 = oscillator_pair(1, 3.0)
    with pytest.raises(NegativeRadicand):
        mp_from_oscillators(z1, z2, 1.0, -1.0, 1, 0.1)


def _riccati_solutions(om, span=0.5):
    f = lambda t, s: (-om(t) - s[0] ** 2,)
    return [odeint.integrate(f, 0.0, (c,), span, FINE) for c in (0.1, 0.7, 1.3)]


@pytest.mark.parametrize("k1,k2", [(0.4, 2.1), (0.5, 1.5), (-1.0, 2.0)])
def test_mp_from_three_riccati_solutions(k1, k2):
    om = TimeFn.parse("1 + t/2")
    xs = _riccati_solutions(om)
    y = mp_from_riccati(*xs, k1, k2, 1.5, om)
    assert max(abs(mp_residual(y, om, 1.5 ** 2 / 4, t)) for t in np.linspace(0, 0.5, 51)) <= 1e-6
    # no hidden k1 <-> k2 symmetry: the swap either leaves the admissible region or moves y
    try:
        swapped = mp_from_riccati(*xs, k2, k1, 1.5, om)
    except NegativeRadicand:
        return
    assert abs(swapped(0.3) - y(0.3)) > 1e-3


def test_mp_from_riccati_degenerate_k():
    om = TimeFn.parse("1")
    with pytest.raises(DegenerateSolutions):
        mp_from_riccati(*_riccati_solutions(om), 1.0, 1.0, 1.5, om)


def test_gambier_from_oscillators():
    spec = GambierSpec("-2*exp(sin(t))", "cos(t)", "0.5 + t", 0, -2)
    tr = to_ks2(spec, "1 + t^2/4", (0.0, 1.0))
    z1, z2 = oscillator_pair(tr.target.omega, tr.reparam.tau_span[1])
    x = gambier_general_solution(spec, tr, z1, z2, 3.0, 2.0, 1)
    assert max(abs(gambier_residual(spec, x, t)) for t in np.linspace(0, 1, 41)) <= 1e-6
    assert direct_deviation(spec, x, 1.0) <= 1e-6


def test_mixed_rule_zero_coefficients():
    lam = (1.0, 0.3, 1.0)
    m = mixed_sr(linear_basis(LinearLieSpec(0, 0, 0), 1.0), lam)
    zero = SecondRiccatiSpec(0, 0, 0)
    for tau in np.linspace(0, 1, 21):
        assert abs(sr_residual(zero, m, tau)) <= 1e-8
        want = (lam[1] + lam[2] * tau) / (lam[0] + lam[1] * tau + lam[2] * tau * tau / 2)
        assert m(tau) == pytest.approx(want, abs=1e-8)


def test_mixed_rule_matches_integration():
    sr = SecondRiccatiSpec(0, "0.5*sin(t)", "0.3")
    m = mixed_sr(linear_basis(LinearLieSpec.from_second_riccati(sr), 1.0, FINE), (1.0, 0.2, 0.5))
    direct = solve(sr, 0.0, m.state(0.0), 1.0)
    assert max(abs(m(t) - direct.at(t)[0]) for t in np.linspace(0, 1, 21)) <= 1e-6
    assert max(abs(sr_residual(sr, m, t)) for t in np.linspace(0, 1, 21)) <= 1e-6


def test_mixed_rule_vanishing_denominator():
    with pytest.raises(DegenerateDenominator):
        mixed_sr(linear_basis(LinearLieSpec(0, 0, 0), 3.0), (1.0, -1.0, 0.0))


def test_exact_n1_constant_coefficients():
    c1, c2 = 0.5, 1.0
    sol = exact_gambier_n1(GambierSpec(-1, 0, 0, 0, 1), (0.0, 2.0), c1, c2)
    for t in np.linspace(0, 2, 41):
        assert sol(t) == pytest.approx((t + c1) / (t * t / 2 + c1 * t + c2), abs=1e-8)
        assert abs(gambier_residual(GambierSpec(-1, 0, 0, 0, 1), sol, t)) <= 1e-8


def test_exact_n1_alpha_identity():
    spec = GambierSpec("-exp(t/2)", "cos(t)", "t", 0, 1)
    alpha = easy_alpha(spec, (0.0, 1.5))
    a0 = spec.a0
    for t in np.linspace(0, 1.5, 31):
        lhs = 3 * alpha.deriv(t) / alpha(t)
        rhs = a0.deriv(t) / a0(t) - spec.a1(t)
        assert abs(lhs - rhs) <= 1e-10


def test_exact_n1_generic_vs_integration():
    spec = GambierSpec("-exp(t/2)", "cos(t)", "t", 0, 1)
    sol = exact_gambier_n1(spec, (0.0, 1.5), 0.5, 1.0)
    assert direct_deviation(spec, sol, 1.0) <= 1e-6
