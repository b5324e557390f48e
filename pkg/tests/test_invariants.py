import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilie.invariants import (LOG_ALPHA_TOL, I_MP, drift, easy_invariant, log_alpha_residual, quadratic_a2_spec,
                                 general_invariant, i2g, i_mp, lambda0_riccati, lambda_spec, lift_riccati,
                                 riccati_particular, solve_alpha_eqr)
from quasilie.models import GambierSpec, MPSpec, solve
from quasilie.transforms import ConditionFailed

A0 = "-2*exp(sin(t))"
EASY = GambierSpec(A0, "cos(t)", "-0.3*exp(2*sin(t))", 0, -2)


def test_easy_invariant_conserved():
    F = easy_invariant(EASY, 0.3, (0.0, 1.0))
    tr = solve(EASY, 0.0, (0.3, 0.0), 1.0)
    assert tr.completed
    assert drift(F, tr) <= 1e-6


def test_mismatched_lambda_drifts():
    F = easy_invariant(EASY, 0.4, (0.0, 1.0), check=False)
    tr = solve(EASY, 0.0, (0.3, 0.0), 1.0)
    assert drift(F, tr) >= 1e-3


def test_easy_invariant_checks_a2():
    with pytest.raises(ConditionFailed):
        easy_invariant(EASY, 0.4, (0.0, 1.0))


def test_alpha_is_one_on_lambda_family():
    spec = lambda_spec(A0, 0.3)
    alpha = solve_alpha_eqr(spec, 0.3, 0.0, (0.0, 1.0))
    assert max(abs(alpha(t) - 1) for t in np.linspace(0, 1, 21)) <= 1e-9


def test_general_invariant_lambda_zero():
    spec = GambierSpec(A0, "cos(t)", "0.2 + 0.3*t", 0, -2)
    alpha = solve_alpha_eqr(spec, 0.0, 0.0, (0.0, 1.0))
    assert log_alpha_residual(spec, 0.0, alpha, (0.0, 1.0)) <= LOG_ALPHA_TOL
    F = general_invariant(spec, 0.0, alpha, (0.0, 1.0))
    tr = solve(spec, 0.0, (0.4, 0.1), 1.0)
    assert tr.completed
    assert drift(F, tr) <= 1e-6


def test_general_invariant_rejects_wrong_alpha():
    spec = GambierSpec(A0, "cos(t)", "0.2 + 0.3*t", 0, -2)
    with pytest.raises(ConditionFailed):
        general_invariant(spec, 0.0, "1 + t^2", (0.0, 1.0))


def test_riccati_route_gives_alpha():
    spec = GambierSpec(A0, "cos(t)", "0.2 + 0.3*t", 0, -2)
    w = riccati_particular(lambda0_riccati(spec), 0.1, (0.0, 1.0))
    alpha = lift_riccati(w, (0.0, 1.0))
    assert alpha(0.0) == pytest.approx(1.0)
    assert log_alpha_residual(spec, 0.0, alpha, (0.0, 1.0)) <= LOG_ALPHA_TOL


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 2.0), st.floats(0.3, 3.0), st.floats(-2, 2), st.floats(0.0, 2.0))
def test_easy_is_multiple_of_i2g(scale, x, v, t):
    a0 = f"{scale!r}*(1 + t^2/2)"
    spec = quadratic_a2_spec(a0)
    lam = -spec.a00 ** 2 / 2
    easy = easy_invariant(spec, lam, (0.0, 2.0), check=False)
    i2 = i2g(spec, (0.0, 2.0), check=False)
    assert easy(t, x, v) == pytest.approx(4 * spec.a00 ** 2 * i2(t, x, v), rel=1e-12, abs=1e-12)


def test_i2g_conserved_on_quadratic_a2_family():
    spec = quadratic_a2_spec("1 + t/2")
    F = i2g(spec, (0.0, 1.0))
    tr = solve(spec, 0.0, (0.8, 0.1), 1.0)
    assert tr.completed and drift(F, tr) <= 1e-6


@pytest.mark.parametrize("y0", [(1.0, 0.2), (0.9, 0.1), (1.5, 0.0)])
def test_i_mp_conserved(y0):
    mp = MPSpec("-1/2", "1/4")
    tr = solve(mp, 0.0, y0, 1.0)
    assert tr.completed
    assert drift(I_MP, tr) <= 1e-6
    assert I_MP(0.0, *y0) == i_mp(0.0, *y0)
