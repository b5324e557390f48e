from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from quasilie import symvf
from quasilie.acceptance import GOLDEN_VG, GOLDEN_EXT, golden_entries, parse_combo
from quasilie.symvf import (LaurentPoly, VectorField, ad_power, basis, bracket_closure, coords_in_span,
                            lie_bracket, plane_field)

Y = {i: basis(f"Y{i}") for i in range(1, 18)}


def test_named_fields():
    assert Y[2] == plane_field(pv={(-1, 2): 1})
    assert Y[11] == plane_field(px={(1, 0): 1})


def test_table_entries_reproduce():
    for row, col, golden in golden_entries():
        assert lie_bracket(basis(row), basis(col)) == parse_combo(golden), (row, col)
    assert sum(len(v) for v in GOLDEN_VG.values()) == 33
    assert sum(len(v) for v in GOLDEN_EXT.values()) == 18


@pytest.mark.parametrize("a,b,want", [
    (4, 8, -Y[8]),
    (8, 1, Y[11] - Y[4]),
    (8, 2, Y[4] * 2),
])
def test_single_brackets(a, b, want):
    assert lie_bracket(Y[a], Y[b]) == want


def test_ad_power_signs():
    for j in range(1, 7):
        want = VectorField([LaurentPoly.zero(2), LaurentPoly(2, {(j + 3, 0): (-1) ** j})])
        assert ad_power(Y[3], Y[6], j) == want
    assert ad_power(Y[3], Y[6], 2) == plane_field(pv={(5, 0): 1})


def test_coords_in_span():
    gens = [Y[i] for i in range(1, 12)]
    c = coords_in_span(lie_bracket(Y[8], Y[2]), gens)
    assert c == tuple(Fraction(2) if i == 3 else Fraction(0) for i in range(11))
    assert coords_in_span(lie_bracket(Y[3], Y[6]), gens) is None


def test_closure_dimensions():
    w = bracket_closure([Y[4], Y[8], Y[11]], 10)
    assert w.closed and w.dim == 3
    z = {i: basis(f"Z{i}") for i in (1, 3, 5, 6)}
    v1 = bracket_closure([z[1], z[3], z[1] + z[5], z[6]], 10)
    assert v1.closed and v1.dim == 4
    sl3 = bracket_closure([basis(f"X{i}") for i in range(1, 9)], 8)
    assert sl3.closed and sl3.dim == 8


def test_closure_cap_exceeded():
    rep = bracket_closure([Y[3], Y[6]], 8)
    assert not rep.closed and rep.cap_exceeded and rep.dim == 9


def test_closure_rejects_small_cap():
    with pytest.raises(ValueError):
        bracket_closure([Y[1], Y[2], Y[3]], 2)


def test_solve_exact_singular():
    assert symvf.solve_exact([[1, 2], [2, 4]], [1, 3]) is None
    assert symvf.solve_exact([[2, 1], [1, 3]], [3, 4]) == [Fraction(1), Fraction(1)]


def test_only_first_variable_is_laurent():
    with pytest.raises(ValueError):
        LaurentPoly(2, {(0, -1): 1})


# -- algebraic laws on random fields ------------------------------------------------

coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)
mono = st.tuples(st.integers(-2, 3), st.integers(0, 2))
poly = st.dictionaries(mono, coef, max_size=4).map(lambda d: LaurentPoly(2, d))
field = st.tuples(poly, poly).map(lambda c: VectorField(list(c)))


@settings(max_examples=60, deadline=None)
@given(field, field)
def test_antisymmetry(a, b):
    assert lie_bracket(a, b) == -lie_bracket(b, a)
    assert lie_bracket(a, a).is_zero()


@settings(max_examples=40, deadline=None)
@given(field, field, field)
def test_jacobi(a, b, c):
    total = lie_bracket(a, lie_bracket(b, c)) + lie_bracket(b, lie_bracket(c, a)) + lie_bracket(c, lie_bracket(a, b))
    assert total.is_zero()


@settings(max_examples=40, deadline=None)
@given(field, field, field, coef)
def test_bilinearity(a, b, c, k):
    assert lie_bracket(a * k + b, c) == lie_bracket(a, c) * k + lie_bracket(b, c)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(range(1, 18)), min_size=1, max_size=5, unique=True), st.lists(coef, min_size=5, max_size=5))
def test_coords_recover_combination(ids, cs):
    gens = [Y[i] for i in ids]
    f = symvf.linear_combination(cs[:len(ids)], gens)
    assert coords_in_span(f, gens) == tuple(Fraction(c) for c in cs[:len(ids)])
