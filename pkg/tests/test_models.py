import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from quasilie import symvf
from quasilie.models import (DomainViolation, GambierSpec, KS2Spec, MPSpec, SchemaError, gambier_b_coeffs,
                             gambier_field_at, ks2_from_gambier, model_from_json, model_to_json, rhs)


def test_kummer_schwarz_coefficients():
    b = gambier_b_coeffs(GambierSpec("2 + sin(t)", "t", "1", 0, -2), 0.7)
    assert b[1] == 1.5 and b[2] == 0


def test_constant_ks2_slice():
    a0 = 3
    b = gambier_b_coeffs(GambierSpec(a0, 0, "t", 0, -2), 0.4)
    assert b[1] == 1.5
    assert b[5] == a0 ** 2 / 2


def test_second_riccati_slice_drops_singular_terms():
    b = gambier_b_coeffs(GambierSpec("-1 - t", "cos(t)", "t", 0, 1), 1.1)
    assert b[1] == b[4] == b[8] == b[9] == 0


def test_rhs_hand_value():
    spec = GambierSpec(-1, 0, 0, 0, 1)
    assert rhs(spec, 0.3, (1.0, 0.0)) == pytest.approx((0.0, -1.0))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([-3, -2, -1, 1, 2, 3]), st.floats(-1, 1), st.floats(0.2, 2), st.floats(-2, 2), st.floats(0, 2))
def test_field_slice_matches_rhs(n, sigma, x, v, t):
    spec = GambierSpec("1 + t/2", "sin(t)", "cos(t)", sigma, n)
    f = gambier_field_at(spec, t)
    pv = sum(float(c) * x ** i * v ** j for (i, j), c in f.comps[1].terms)
    px = sum(float(c) * x ** i * v ** j for (i, j), c in f.comps[0].terms)
    dx, dv = rhs(spec, t, (x, v))
    assert px == pytest.approx(dx, rel=1e-9, abs=1e-9)
    assert pv == pytest.approx(dv, rel=1e-9, abs=1e-9)


def test_domain_violation():
    with pytest.raises(DomainViolation):
        rhs(GambierSpec(1, 0, 0, 0, -2), 0.0, (0.0, 1.0))
    with pytest.raises(DomainViolation):
        rhs(MPSpec(1, 0.25), 0.0, (-0.1, 0.0))


@pytest.mark.parametrize("bad", [
    {"family": "gambier", "a0": "1", "a1": "0", "a2": "0", "n": 0},
    {"family": "gambier", "a0": "sin(t)", "a1": "0", "a2": "0", "n": 1},
    {"family": "gambier", "a0": "1", "a1": "0", "n": 1},
    {"family": "nope"},
    {"a0": "1"},
    {"family": "mp", "omega": "1", "kcoef": -1},
])
def test_schema_errors(bad):
    with pytest.raises(SchemaError):
        model_from_json(bad)


def test_json_round_trip():
    spec = GambierSpec("-2*exp(sin(t))", "cos(t)", "1/2 + t", Fraction(1, 3), -2)
    d = json.loads(json.dumps(model_to_json(spec)))
    back = model_from_json(d)
    for t in (0.0, 0.5, 1.5):
        assert gambier_b_coeffs(back, t) == pytest.approx(gambier_b_coeffs(spec, t), rel=1e-15)


def test_ks2_from_gambier():
    k = ks2_from_gambier(GambierSpec(3, 0, "t", 0, -2))
    assert isinstance(k, KS2Spec)
    assert k.c0 == Fraction(-9, 4)
    assert k.omega(0.5) == -0.5


def test_field_is_exact_on_rational_slice():
    f = gambier_field_at(GambierSpec(2, "1/2", "3", 0, -2), 0.0)
    assert symvf.coords_in_span(f, symvf.y_basis(10))[1] == Fraction(3, 2)
