"""Exact polynomial vector fields and their Lie brackets.

Components are Laurent polynomials: the first variable may carry negative
exponents (the fields live on the punctured plane x != 0), the others may
not.  Coefficients are :class:`fractions.Fraction` in the exact layer; float
coefficients are tolerated so that numerically evaluated fields can reuse
the same containers, but no float ever enters a bracket or a span solve
that is expected to be exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from numbers import Rational
from typing import Iterable, Mapping, Sequence

PLANE_VARS = ("x", "v")
LINEAR_VARS = ("y", "vy", "ay")


def _canon(terms: Mapping[tuple, object]) -> tuple:
    return tuple(sorted((k, c) for k, c in terms.items() if c != 0))


class LaurentPoly:
    """Sparse polynomial in ``nvars`` variables, Laurent in the first one.

    Terms are kept sorted by exponent tuple and never store a zero
    coefficient, so structural equality is mathematical equality.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        self.nvars = nvars
        terms = terms or {}
        for exps in terms:
            if len(exps) != nvars:
                raise ValueError(f"exponent tuple {exps} does not have {nvars} entries")
            if any(e < 0 for e in exps[1:]):
                raise ValueError(f"only the first variable may have negative exponents: {exps}")
        self.terms = _canon(terms)
        self._hash = None

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1) -> "LaurentPoly":
        return cls(len(exps), {tuple(exps): _coerce(coeff)})

    @classmethod
    def constant(cls, nvars: int, c) -> "LaurentPoly":
        return cls(nvars, {(0,) * nvars: _coerce(c)})

    @classmethod
    def zero(cls, nvars: int) -> "LaurentPoly":
        return cls(nvars)

    def as_dict(self) -> dict:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "LaurentPoly"):
        if self.nvars != other.nvars:
            raise ValueError("polynomials over different variable counts")

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms:
            out[k] = out.get(k, 0) + c
        return LaurentPoly(self.nvars, out)

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(self.nvars, {k: -c for k, c in self.terms})

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return self + (-other)

    def scale(self, c) -> "LaurentPoly":
        c = _coerce(c)
        return LaurentPoly(self.nvars, {k: c * a for k, a in self.terms})

    def __mul__(self, other):
        if not isinstance(other, LaurentPoly):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for k1, c1 in self.terms:
            for k2, c2 in other.terms:
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + c1 * c2
        return LaurentPoly(self.nvars, out)

    __rmul__ = __mul__

    def diff(self, i: int) -> "LaurentPoly":
        out = {}
        for k, c in self.terms:
            e = k[i]
            if e != 0:
                kk = list(k)
                kk[i] -= 1
                out[tuple(kk)] = c * e
        return LaurentPoly(self.nvars, out)

    def __call__(self, *point):
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates")
        total = 0
        for k, c in self.terms:
            term = c
            for p, e in zip(point, k):
                if e:
                    term = term * p**e
            total = total + term
        return total

    def __eq__(self, other) -> bool:
        return isinstance(other, LaurentPoly) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, self.terms))
        return self._hash

    def format(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = [_format_term(c, k, names) for k, c in self.terms]
        s = parts[0]
        for p in parts[1:]:
            s += " - " + p[1:] if p.startswith("-") else " + " + p
        return s

    def __repr__(self) -> str:
        names = PLANE_VARS if self.nvars == 2 else tuple(f"u{i}" for i in range(self.nvars))
        return f"LaurentPoly({self.format(names)})"


def _coerce(c):
    if isinstance(c, (Fraction, float)):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    return c


def _format_term(c, exps, names) -> str:
    factors = []
    for name, e in zip(names, exps):
        if e == 1:
            factors.append(name)
        elif e != 0:
            factors.append(f"{name}^{e}")
    mono = "*".join(factors)
    if not mono:
        return str(c)
    if c == 1:
        return mono
    if c == -1:
        return "-" + mono
    return f"{c}*{mono}"


class VectorField:
    """Vector field ``sum_i comps[i] d/d(var_i)`` with Laurent-polynomial components."""

    __slots__ = ("comps", "names", "_hash")

    def __init__(self, comps: Sequence[LaurentPoly], names: Sequence[str] | None = None):
        comps = tuple(comps)
        n = len(comps)
        if any(c.nvars != n for c in comps):
            raise ValueError("component variable count must equal the dimension")
        self.comps = comps
        self.names = tuple(names) if names is not None else _default_names(n)
        self._hash = None

    @property
    def dim(self) -> int:
        return len(self.comps)

    @classmethod
    def zero(cls, n: int, names=None) -> "VectorField":
        return cls([LaurentPoly.zero(n)] * n, names)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def _check(self, other: "VectorField"):
        if self.dim != other.dim:
            raise ValueError("vector fields on spaces of different dimension")

    def __add__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a + b for a, b in zip(self.comps, other.comps)], self.names)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check(other)
        return VectorField([a - b for a, b in zip(self.comps, other.comps)], self.names)

    def __neg__(self) -> "VectorField":
        return VectorField([-a for a in self.comps], self.names)

    def __mul__(self, c) -> "VectorField":
        return VectorField([a.scale(c) for a in self.comps], self.names)

    __rmul__ = __mul__

    def __truediv__(self, c) -> "VectorField":
        return self * (Fraction(1) / _coerce(c))

    def apply(self, f: LaurentPoly) -> LaurentPoly:
        """Directional derivative of the function ``f`` along this field."""
        out = LaurentPoly.zero(self.dim)
        for i, comp in enumerate(self.comps):
            if not comp.is_zero():
                out = out + comp * f.diff(i)
        return out

    def __call__(self, *point) -> tuple:
        return tuple(c(*point) for c in self.comps)

    def __eq__(self, other) -> bool:
        return isinstance(other, VectorField) and self.comps == other.comps

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.comps)
        return self._hash

    def __str__(self) -> str:
        parts = []
        for name, comp in zip(self.names, self.comps):
            if comp.is_zero():
                continue
            body = comp.format(self.names)
            if len(comp.terms) > 1:
                body = f"({body})"
            parts.append(f"{body} d/d{name}")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"VectorField({self})"


def _default_names(n: int) -> tuple:
    if n == 2:
        return PLANE_VARS
    if n == 3:
        return LINEAR_VARS
    if n == 1:
        return ("x",)
    return tuple(f"u{i}" for i in range(n))


def plane_field(px: Mapping[tuple, object] | None = None, pv: Mapping[tuple, object] | None = None) -> VectorField:
    """Field ``px d/dx + pv d/dv`` from ``{(xexp, vexp): coeff}`` dictionaries."""
    return VectorField([LaurentPoly(2, px or {}), LaurentPoly(2, pv or {})], PLANE_VARS)


def lie_bracket(a: VectorField, b: VectorField) -> VectorField:
    """[A, B] with components A(B^i) - B(A^i)."""
    a._check(b)
    return VectorField([a.apply(bi) - b.apply(ai) for ai, bi in zip(a.comps, b.comps)], a.names)


def ad_power(a: VectorField, b: VectorField, j: int) -> VectorField:
    if j < 1:
        raise ValueError("j must be a positive integer")
    out = b
    for _ in range(j):
        out = lie_bracket(a, out)
    return out


# -- span computations ---------------------------------------------------------

def _coordinates(fields: Sequence[VectorField]) -> tuple[list, list]:
    keys = sorted({(i, k) for f in fields for i, c in enumerate(f.comps) for k, _ in c.terms})
    cols = []
    for f in fields:
        d = {(i, k): c for i, comp in enumerate(f.comps) for k, c in comp.terms}
        cols.append([d.get(key, 0) for key in keys])
    return keys, cols


def _integer_rows(rows: list) -> list:
    out = []
    for row in rows:
        den = 1
        for c in row:
            den = den * Fraction(c).denominator // _gcd(den, Fraction(c).denominator)
        out.append([int(Fraction(c) * den) for c in row])
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def solve_exact(matrix: list, rhs: list) -> list | None:
    """Solve ``matrix @ c = rhs`` over the rationals, or return None if inconsistent.

    Fraction-free (Bareiss) elimination on the integer-scaled augmented
    matrix; free variables are set to zero.
    """
    nrows = len(matrix)
    ncols = len(matrix[0]) if nrows else 0
    m = _integer_rows([list(r) + [b] for r, b in zip(matrix, rhs)])
    pivots = []
    prev = 1
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols + 1):
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev
            m[i][c] = 0
        prev = m[r][c]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    if any(m[i][ncols] != 0 for i in range(r, nrows)):
        return None
    sol = [Fraction(0)] * ncols
    for i in range(len(pivots) - 1, -1, -1):
        c = pivots[i]
        s = Fraction(m[i][ncols])
        for j in range(c + 1, ncols):
            if m[i][j]:
                s -= m[i][j] * sol[j]
        sol[c] = s / m[i][c]
    return sol


def _is_exact(fields: Iterable[VectorField]) -> bool:
    return all(not isinstance(c, float) for f in fields for comp in f.comps for _, c in comp.terms)


def coords_in_span(f: VectorField, gens: Sequence[VectorField]) -> tuple | None:
    """Exact coordinates of ``f`` in the rational span of ``gens``, or None."""
    if not gens:
        raise ValueError("need at least one generator")
    if not _is_exact([f, *gens]):
        raise TypeError("coords_in_span needs exact (rational) coefficients; see rationalize_field")
    keys, cols = _coordinates([*gens, f])
    target = cols.pop()
    if not keys:
        return tuple(Fraction(0) for _ in gens)
    matrix = [[col[r] for col in cols] for r in range(len(keys))]
    sol = solve_exact(matrix, target)
    return None if sol is None else tuple(sol)


def rank(fields: Sequence[VectorField]) -> int:
    if not fields:
        return 0
    keys, cols = _coordinates(fields)
    if not keys:
        return 0
    rows = _integer_rows([[col[r] for col in cols] for r in range(len(keys))])
    n, m = len(rows), len(cols)
    rk, prev = 0, 1
    for c in range(m):
        p = next((i for i in range(rk, n) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[rk], rows[p] = rows[p], rows[rk]
        for i in range(rk + 1, n):
            for j in range(c + 1, m):
                rows[i][j] = (rows[rk][c] * rows[i][j] - rows[i][c] * rows[rk][j]) // prev
            rows[i][c] = 0
        prev = rows[rk][c]
        rk += 1
    return rk


def independent(fields: Sequence[VectorField]) -> bool:
    return rank(fields) == len(fields)


def rationalize(x: float, tol: float = 1e-12) -> Fraction:
    """Smallest-denominator rational within ``tol * max(1, |x|)`` of ``x``."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    target = Fraction(x)
    bound = tol * max(1.0, abs(x))
    cap = 1
    while True:
        q = target.limit_denominator(cap)
        if abs(q - target) <= bound:
            return q
        cap *= 16


def rationalize_field(f: VectorField, tol: float = 1e-12) -> VectorField:
    return VectorField(
        [LaurentPoly(c.nvars, {k: rationalize(a, tol) for k, a in c.terms}) for c in f.comps], f.names
    )


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    basis: tuple = field(repr=False)
    dim: int = 0

    @property
    def cap_exceeded(self) -> bool:
        return not self.closed


def bracket_closure(gens: Sequence[VectorField], dim_cap: int) -> ClosureReport:
    """Adjoin brackets until the span is a Lie algebra or exceeds ``dim_cap``."""
    if dim_cap < len(gens):
        raise ValueError("dim_cap must be at least the number of generators")
    basis: list = []
    for g in gens:
        if not g.is_zero() and (not basis or coords_in_span(g, basis) is None):
            basis.append(g)
    done = set()
    while True:
        new = None
        for i, j in combinations(range(len(basis)), 2):
            if (i, j) in done:
                continue
            done.add((i, j))
            br = lie_bracket(basis[i], basis[j])
            if not br.is_zero() and coords_in_span(br, basis) is None:
                new = br
                break
        if new is None:
            return ClosureReport(True, tuple(basis), len(basis))
        basis.append(new)
        if len(basis) > dim_cap:
            return ClosureReport(False, tuple(basis), len(basis))


# -- named fields --------------------------------------------------------------

def _y_fields() -> dict:
    one = Fraction(1)
    Y = {
        "Y1": plane_field(px={(0, 1): one}),
        "Y2": plane_field(pv={(-1, 2): one}),
        "Y3": plane_field(pv={(1, 1): one}),
        "Y4": plane_field(pv={(0, 1): one}),
        "Y5": plane_field(pv={(-1, 1): one}),
        "Y6": plane_field(pv={(3, 0): one}),
        "Y7": plane_field(pv={(2, 0): one}),
        "Y8": plane_field(pv={(1, 0): one}),
        "Y9": plane_field(pv={(0, 0): one}),
        "Y10": plane_field(pv={(-1, 0): one}),
        "Y11": plane_field(px={(1, 0): one}),
        "Y12": plane_field(px={(0, 0): one}),
        "Y13": plane_field(px={(2, 0): one}),
        "Y14": plane_field(px={(1, 1): one}),
        "Y15": plane_field(px={(3, 0): one}),
        "Y16": plane_field(pv={(4, 0): one}),
        "Y17": plane_field(pv={(0, 2): one}),
    }
    return Y


def _sl3_fields() -> dict:
    X = {
        "X1": plane_field(px={(0, 1): 1}, pv={(1, 1): -3, (3, 0): -1}),
        "X2": plane_field(pv={(0, 0): 1}),
        "X3": plane_field(px={(0, 0): -1}, pv={(1, 0): 3}),
        "X4": plane_field(px={(1, 0): 1}, pv={(2, 0): -2}),
        "X5": plane_field(px={(0, 1): 1, (2, 0): 2}, pv={(1, 1): -1, (3, 0): -3}),
        "X6": plane_field(px={(1, 1): 2, (3, 0): 2}, pv={(0, 2): 2, (4, 0): -2}),
        "X7": plane_field(px={(0, 0): 1}, pv={(1, 0): -1}),
        "X8": plane_field(px={(1, 0): 2}, pv={(0, 1): 4}),
    }
    return X


def _z_fields(X: dict) -> dict:
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    return {
        "Z1": X["X1"],
        "Z2": (X["X3"] + X["X7"]) * half,
        "Z3": (X["X8"] - X["X4"] * 2) * quarter,
        "Z4": X["X4"],
        "Z5": X["X5"],
        "Z6": X["X6"],
    }


def _linear_field(comps: dict) -> VectorField:
    return VectorField([LaurentPoly(3, comps.get(i, {})) for i in range(3)], LINEAR_VARS)


def _w_fields() -> dict:
    # coordinates (y, vy, ay)
    return {
        "W1": _linear_field({0: {(0, 1, 0): 1}, 1: {(0, 0, 1): 1}}),
        "W2": _linear_field({2: {(0, 0, 1): 1}}),
        "W3": _linear_field({1: {(0, 0, 1): 2}}),
        "W4": _linear_field({0: {(0, 0, 1): -2}}),
    }


_BASIS: dict = {}
_BASIS.update(_y_fields())
_BASIS.update(_sl3_fields())
_BASIS.update(_z_fields(_BASIS))
_BASIS.update(_w_fields())

BASIS_IDS = tuple(_BASIS)


def basis(name: str) -> VectorField:
    """Named field: Y1..Y17, X1..X8 (the sl(3) realisation), Z1..Z6 or W1..W4."""
    try:
        return _BASIS[name]
    except KeyError:
        raise KeyError(f"unknown basis field {name!r}") from None


def ks2_basis(c0) -> tuple:
    """(X1, X2, X3) spanning the sl(2) algebra of the KS2 equation with constant c0."""
    c0 = _coerce(c0)
    x1 = plane_field(pv={(1, 0): 2})
    x2 = plane_field(px={(1, 0): 1}, pv={(0, 1): 2})
    x3 = plane_field(px={(0, 1): 1}, pv={(-1, 2): Fraction(3, 2), (3, 0): -2 * c0})
    return x1, x2, x3


def y_basis(upto: int = 11) -> list:
    return [_BASIS[f"Y{i}"] for i in range(1, upto + 1)]


def linear_combination(coeffs: Sequence, gens: Sequence[VectorField]) -> VectorField:
    out = VectorField.zero(gens[0].dim, gens[0].names)
    for c, g in zip(coeffs, gens):
        if c != 0:
            out = out + g * c
    return out


def conjugate_linear(f: VectorField, m: Sequence[Sequence], mdot: Sequence[Sequence]) -> VectorField:
    """Push a plane field forward by the lower-triangular linear map ``m(t)``.

    ``m = [[alpha, 0], [gamma, delta]]`` acts as (x, v) -> (alpha x, gamma x + delta v);
    ``mdot`` is its time derivative.  Returns ``m f(m^-1 p) + mdot m^-1 p``,
    which is again a Laurent field.  Exact when the entries are Fractions.
    """
    (al, zero), (ga, de) = m
    if zero != 0:
        raise ValueError("map must be lower triangular")
    (dal, _), (dga, dde) = mdot
    one = Fraction(1) if _is_fraction_like(al, ga, de) else 1.0
    inv_al = one / al
    inv_de = one / de
    # x = xb/al ; v = (vb - ga*xb/al)/de
    vsub = LaurentPoly(2, {(0, 1): inv_de, (1, 0): -ga * inv_al * inv_de})

    def subst(p: LaurentPoly) -> LaurentPoly:
        out = LaurentPoly.zero(2)
        vpow = {0: LaurentPoly.constant(2, one)}
        for (i, j), c in p.terms:
            if j not in vpow:
                vpow[j] = _poly_pow(vsub, j, one)
            # x -> xb/al is a monomial, so x^i stays one for negative i too
            xpart = LaurentPoly(2, {(i, 0): inv_al**i if i >= 0 else al ** (-i)})
            out = out + (xpart * vpow[j]).scale(c)
        return out

    fx, fv = (subst(c) for c in f.comps)
    lin_x = LaurentPoly(2, {(1, 0): dal * inv_al})
    lin_v = LaurentPoly(2, {(1, 0): (dga - dde * ga * inv_de) * inv_al, (0, 1): dde * inv_de})
    px = fx.scale(al) + lin_x
    pv = fx.scale(ga) + fv.scale(de) + lin_v
    return VectorField([px, pv], PLANE_VARS)


def _poly_pow(p: LaurentPoly, j: int, one) -> LaurentPoly:
    (k1, c1), (k2, c2) = _two_terms(p)
    out = {}
    for r in range(j + 1):
        k = tuple(r * a + (j - r) * b for a, b in zip(k1, k2))
        out[k] = out.get(k, 0) + comb(j, r) * c1**r * c2 ** (j - r) * one
    return LaurentPoly(2, out)


def _two_terms(p: LaurentPoly):
    terms = list(p.terms)
    while len(terms) < 2:
        terms.append(((0, 0), 0))
    return terms[0], terms[1]


def _is_fraction_like(*vals) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in vals)
