from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from quasilie import symvf
from quasilie.models import GambierSpec
from quasilie.scheme import (FlowElement, FlowError, SPACE_NAMES, apply_flow, check_scheme, compose_flows,
                             numeric_coords, pushforward_coeffs, pushforward_exact, pushforward_field,
                             pushforward_field_numeric, space)
from quasilie.symvf import basis


@pytest.mark.parametrize("w,v", [("W_G", "V_G"), ("W_G", "V'_G"), ("Abel_W", "Abel_V"), ("W_lin", "W_lin"),
                                 ("V0_KS2", "V0_KS2"), ("sl3", "sl3")])
def test_schemes_pass(w, v):
    rep = check_scheme(space(w), space(v))
    assert rep.passed
    assert [c["pass"] for c in rep.to_json()["conditions"]] == [True, True, True]


def test_vg_is_not_a_lie_algebra():
    rep = check_scheme(space("V_G"), space("V_G"))
    assert not rep.passed
    ww = rep.conditions[1]
    assert ww.name == "[W,W] subset W" and not ww.passed
    assert "[Y3,Y6]" in rep.witness_brackets()


def test_space_names_all_build():
    for name in SPACE_NAMES:
        assert len(space(name)) >= 1
    with pytest.raises(KeyError):
        space("nope")


def test_gamma_only_flow_hand_values():
    spec = GambierSpec("1 + t", "sin(t)", "t", Fraction(1, 2), 3)
    g = FlowElement(1, "t", 1)
    for t in (0.0, 0.4, 1.3):
        b = pushforward_coeffs(spec, g, t)
        assert b[10] == pytest.approx(-t)
        assert b[3] == pytest.approx(spec.a1(t) + (2 - 3) * t / 3)


def _spec(n, s, c):
    return GambierSpec(f"{c[0]!r} + {c[1]!r}*sin(t)", f"{c[2]!r}*cos(t)", f"{c[3]!r} + t", s, n)


small = st.floats(-0.5, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([-3, -2, -1, 1, 2, 3]), st.floats(-1, 1), st.tuples(st.floats(1, 2), small, small, small),
       st.tuples(small, small, small), st.floats(0, 1.5))
def test_coefficient_formula_equals_field_pushforward(n, s, c, f, t):
    spec = _spec(n, s, c)
    g = FlowElement(f"exp({f[0]!r}*t)", f"{f[1]!r}*t", f"1 + {f[2]!r}*sin(t)")
    b = pushforward_coeffs(spec, g, t)
    coords = numeric_coords(pushforward_field_numeric(spec, g, t), symvf.y_basis(11))
    assert coords is not None
    for p, q in zip(b, coords):
        assert q == pytest.approx(p, rel=1e-9, abs=1e-12)


def test_exact_equivalence_on_rational_jets():
    spec = GambierSpec("2 + t", "t/3", "1 - t", Fraction(1, 2), 3)
    g = FlowElement("1 + t/2", "t/5", "1 + t^2")
    for t in (0.0, 0.5, 1.0):
        formula, coords = pushforward_exact(spec, g, t)
        assert all(isinstance(x, Fraction) for x in formula)
        assert tuple(formula) == tuple(coords)


def test_pushforward_functorial():
    spec = GambierSpec("1 + t/3", "sin(t)", "t", Fraction(1, 4), -2)
    g = FlowElement("exp(t/3)", "t/2", "1 + t^2")
    h = FlowElement("1 + t", "sin(t)", "exp(-t)")
    gh = compose_flows(g, h)
    for t in (0.2, 0.9):
        once = pushforward_field(lambda s: pushforward_field_numeric(spec, h, s), g, t)
        direct = pushforward_field_numeric(spec, gh, t)
        a = numeric_coords(once, symvf.y_basis(11))
        b = numeric_coords(direct, symvf.y_basis(11))
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


def test_shear_flow_preserves_wg():
    # the flow of Y8 = x d/dv is the shear (x, v) -> (x, v + s x)
    zero = ((Fraction(0), Fraction(0)), (Fraction(0), Fraction(0)))
    wg = space("W_G")
    for s in (Fraction(1, 2), Fraction(-3)):
        m = ((Fraction(1), Fraction(0)), (s, Fraction(1)))
        for _, f in wg:
            assert wg.contains(symvf.conjugate_linear(f, m, zero)) is not None
    assert wg.contains(symvf.conjugate_linear(basis("Y4"), ((1, 0), (Fraction(1, 2), 1)), zero)) is not None


def test_flow_validation():
    with pytest.raises(FlowError):
        FlowElement(2, 0, 1).validate()
    with pytest.raises(FlowError):
        FlowElement("1 - t", 0, 1).validate((0.0, 2.0))
    FlowElement("exp(t)", "t", "1 + t").validate((0.0, 2.0))


def test_inverse_undoes_flow():
    g = FlowElement("exp(t)", "t^2", "1 + t")
    for t in (0.3, 1.7):
        x, v = apply_flow(g.inverse(), t, apply_flow(g, t, (0.7, -0.2)))
        assert (x, v) == pytest.approx((0.7, -0.2), abs=1e-14)
