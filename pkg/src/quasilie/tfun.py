"""Scalar functions of time with exact symbolic derivatives.

Coefficient functions are entered as text in a small grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative, exponent must be rational
    atom   := number | 't' | func '(' expr ')' | '(' expr ')'
    func   := exp | log | sin | cos

and parsed into an AST that can be differentiated symbolically.  Functions
that have no closed form (antiderivatives, solutions of auxiliary ODEs,
compositions with a numerically inverted reparametrisation) enter the same
AST as :class:`Sampled` leaves that carry their own derivative expression,
so every derived coefficient still differentiates exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import odeint

# -- AST -----------------------------------------------------------------------


class Expr:
    """Base AST node.  Arithmetic operators build simplified trees."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return add(self, neg(_lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), neg(self))

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __truediv__(self, other):
        return div(self, _lift(other))

    def __rtruediv__(self, other):
        return div(_lift(other), self)

    def __pow__(self, k):
        return power(self, Fraction(k))

    def __neg__(self):
        return neg(self)

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: Fraction | float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    pass


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Func(Expr):
    name: str
    arg: Expr


class Sampled(Expr):
    """Opaque numeric leaf: ``fn(t)`` with derivative given by another Expr.

    ``deriv`` may be an Expr or a zero-argument callable returning one, which
    lets mutually recursive definitions (alpha' = alpha * w) be built lazily.
    """

    __slots__ = ("name", "fn", "_deriv")

    def __init__(self, name: str, fn: Callable[[float], float], deriv=None):
        self.name = name
        self.fn = fn
        self._deriv = deriv

    def derivative(self) -> Expr:
        d = self._deriv
        if d is None:
            raise NotImplementedError(f"{self.name} has no known derivative")
        if callable(d) and not isinstance(d, Expr):
            d = d()
            self._deriv = d
        return d

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"Sampled({self.name})"


FUNCS = ("exp", "log", "sin", "cos")
ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
T = Var()


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, TimeFn):
        return x.expr
    if isinstance(x, float):
        return Const(x)
    return Const(Fraction(x))


def is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def add(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0):
        return b
    if is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if isinstance(b, Neg) and b.arg == a:
        return ZERO
    return Add(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def mul(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0) or is_const(b, 0):
        return ZERO
    if is_const(a, 1):
        return b
    if is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if is_const(a, -1):
        return neg(b)
    if is_const(b, -1):
        return neg(a)
    if isinstance(b, Const):
        a, b = b, a
    if isinstance(a, Const) and isinstance(b, Mul) and isinstance(b.left, Const):
        return mul(Const(a.value * b.left.value), b.right)
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_const(b, 0):
        raise ZeroDivisionError("division by the constant zero")
    if is_const(a, 0):
        return ZERO
    if is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value / b.value)
    if isinstance(b, Const):
        return mul(Const(1 / b.value), a)
    if a == b:
        return ONE
    return Div(a, b)


def power(base: Expr, k: Fraction) -> Expr:
    k = Fraction(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const) and (k.denominator == 1) and not (base.value == 0 and k < 0):
        return Const(base.value ** int(k))
    return Pow(base, k)


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCS:
        raise ValueError(f"unknown function {name!r}")
    if isinstance(arg, Const):
        if name == "exp" and arg.value == 0:
            return ONE
        if name == "log" and arg.value == 1:
            return ZERO
        if name == "sin" and arg.value == 0:
            return ZERO
        if name == "cos" and arg.value == 0:
            return ONE
    if name == "log" and isinstance(arg, Func) and arg.name == "exp":
        return arg.arg
    return Func(name, arg)


def exp(e) -> Expr:
    return func("exp", _lift(e))


def log(e) -> Expr:
    return func("log", _lift(e))


def sin(e) -> Expr:
    return func("sin", _lift(e))


def cos(e) -> Expr:
    return func("cos", _lift(e))


# -- differentiation -------------------------------------------------------------


def differentiate(e: Expr) -> Expr:
    """Symbolic d/dt."""
    return _diff(e)


@lru_cache(maxsize=4096)
def _diff_cached(e: Expr) -> Expr:
    return _diff_impl(e)


def _diff(e: Expr) -> Expr:
    if isinstance(e, Sampled):
        return e.derivative()
    return _diff_cached(e)


def _diff_impl(e: Expr) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(_diff(e.left), _diff(e.right))
    if isinstance(e, Neg):
        return neg(_diff(e.arg))
    if isinstance(e, Mul):
        return add(mul(_diff(e.left), e.right), mul(e.left, _diff(e.right)))
    if isinstance(e, Div):
        du, dv = _diff(e.num), _diff(e.den)
        if is_const(dv, 0):
            return div(du, e.den)
        return div(add(mul(du, e.den), neg(mul(e.num, dv))), power(e.den, Fraction(2)))
    if isinstance(e, Pow):
        return mul(mul(Const(e.exponent), power(e.base, e.exponent - 1)), _diff(e.base))
    if isinstance(e, Func):
        du = _diff(e.arg)
        if e.name == "exp":
            return mul(du, e)
        if e.name == "log":
            return div(du, e.arg)
        if e.name == "sin":
            return mul(du, func("cos", e.arg))
        if e.name == "cos":
            return neg(mul(du, func("sin", e.arg)))
    raise TypeError(f"cannot differentiate {e!r}")


# -- evaluation ----------------------------------------------------------------

_MATH = {"exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}


def compile_expr(e: Expr) -> Callable[[float], float]:
    """Turn an AST into a nested closure ``t -> float``."""
    return _compile(e, {})


def _compile(e: Expr, memo: dict) -> Callable[[float], float]:
    key = id(e)
    if key in memo:
        return memo[key][0]
    fn = _compile_node(e, memo)
    memo[key] = (fn, e)
    return fn


def _compile_node(e: Expr, memo: dict):
    if isinstance(e, Const):
        c = float(e.value)
        return lambda t: c
    if isinstance(e, Var):
        return lambda t: t
    if isinstance(e, Add):
        a, b = _compile(e.left, memo), _compile(e.right, memo)
        return lambda t: a(t) + b(t)
    if isinstance(e, Neg):
        a = _compile(e.arg, memo)
        return lambda t: -a(t)
    if isinstance(e, Mul):
        a, b = _compile(e.left, memo), _compile(e.right, memo)
        return lambda t: a(t) * b(t)
    if isinstance(e, Div):
        a, b = _compile(e.num, memo), _compile(e.den, memo)
        return lambda t: a(t) / b(t)
    if isinstance(e, Pow):
        a = _compile(e.base, memo)
        k = e.exponent
        if k.denominator == 1:
            ki = int(k)
            return lambda t: a(t) ** ki
        if k.denominator % 2 == 1:
            kf = float(k)

            def odd_root(t):
                b = a(t)
                return math.copysign(abs(b) ** kf, b) if k.numerator % 2 else abs(b) ** kf

            return odd_root
        kf = float(k)

        def even_root(t):
            b = a(t)
            if b < 0:
                raise ValueError("even root of a negative number")
            return b**kf

        return even_root
    if isinstance(e, Func):
        a, f = _compile(e.arg, memo), _MATH[e.name]
        return lambda t: f(a(t))
    if isinstance(e, Sampled):
        fn = e.fn
        last = [None, 0.0]

        def sampled(t):
            if last[0] != t:
                last[1] = fn(t)
                last[0] = t
            return last[1]

        return sampled
    raise TypeError(f"cannot evaluate {e!r}")


def evaluate(e: Expr, t: float) -> float:
    return compile_expr(e)(t)


def is_closed_form(e: Expr) -> bool:
    if isinstance(e, Sampled):
        return False
    if isinstance(e, (Const, Var)):
        return True
    return all(is_closed_form(c) for c in _children(e))


def _children(e: Expr):
    if isinstance(e, (Add, Mul)):
        return (e.left, e.right)
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, (Pow, Neg)):
        return (e.base,) if isinstance(e, Pow) else (e.arg,)
    if isinstance(e, Func):
        return (e.arg,)
    return ()


# -- printing --------------------------------------------------------------------

_PREC = {Add: 1, Neg: 2, Mul: 3, Div: 3, Pow: 4}


def _fmt_const(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def to_source(e: Expr) -> str:
    """Render in the input grammar; closed-form ASTs round-trip through parse_expr."""
    return _src(e, 0)


def _src(e: Expr, ctx: int) -> str:
    if isinstance(e, Const):
        s = _fmt_const(e.value)
        needs = e.value < 0 or "/" in s
        return f"({s})" if needs and ctx > 1 else s
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Sampled):
        return f"{e.name}(t)"
    if isinstance(e, Func):
        return f"{e.name}({_src(e.arg, 0)})"
    p = _PREC[type(e)]
    if isinstance(e, Add):
        right = e.right
        if isinstance(right, Neg):
            s = f"{_src(e.left, 1)} - {_src(right.arg, 2)}"
        else:
            s = f"{_src(e.left, 1)} + {_src(right, 1)}"
    elif isinstance(e, Neg):
        s = f"-{_src(e.arg, 3)}"
    elif isinstance(e, Mul):
        s = f"{_src(e.left, 3)}*{_src(e.right, 4)}"
    elif isinstance(e, Div):
        s = f"{_src(e.num, 3)}/{_src(e.den, 4)}"
    else:
        k = e.exponent
        ks = str(k.numerator) if k.denominator == 1 else f"({k.numerator}/{k.denominator})"
        if k < 0 and k.denominator == 1:
            ks = f"({k.numerator})"
        s = f"{_src(e.base, 5)}^{ks}"
    return f"({s})" if p < ctx or (ctx == 5 and p <= 5) else s


# -- parsing ---------------------------------------------------------------------


class ParseError(ValueError):
    def __init__(self, message: str, offset: int, expected: tuple = ()):
        detail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")
        self.offset = offset
        self.expected = expected


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def skip(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos, (ch,))
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.pos, ("+", "-", "*", "/", "^", "end of input"))
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek() in ("+", "-"):
            op = self.src[self.pos]
            self.pos += 1
            r = self.term()
            e = Add(e, r) if op == "+" else Add(e, Neg(r))
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek() in ("*", "/"):
            op = self.src[self.pos]
            self.pos += 1
            r = self.unary()
            e = Mul(e, r) if op == "*" else Div(e, r)
        return e

    def unary(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            start = self.pos
            k = _rational_value(self.unary())
            if k is None:
                raise ParseError("exponent must be a rational constant", start, ("number",))
            return Pow(base, k)
        return base

    def atom(self) -> Expr:
        ch = self.peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if ch.isdigit() or ch == ".":
            j = self.pos
            while j < len(self.src) and (self.src[j].isdigit() or self.src[j] == "."):
                j += 1
            if j < len(self.src) and self.src[j] in "eE" and j + 1 < len(self.src) and (
                self.src[j + 1].isdigit() or self.src[j + 1] in "+-"
            ):
                j += 2
                while j < len(self.src) and self.src[j].isdigit():
                    j += 1
            text = self.src[self.pos : j]
            try:
                value = Fraction(text)
            except ValueError:
                raise ParseError(f"malformed number {text!r}", start) from None
            self.pos = j
            return Const(value)
        if ch.isalpha():
            j = self.pos
            while j < len(self.src) and self.src[j].isalnum():
                j += 1
            word = self.src[self.pos : j]
            self.pos = j
            if word == "t":
                return T
            if word in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(word, arg)
            if word == "pi":
                return Const(math.pi)
            raise ParseError(f"unknown identifier {word!r}", start, ("t", *FUNCS))
        raise ParseError("unexpected end of input" if not ch else f"unexpected {ch!r}", start,
                         ("number", "t", "(", "-", *FUNCS))


def _rational_value(e: Expr) -> Fraction | None:
    if isinstance(e, Const) and isinstance(e.value, Fraction):
        return e.value
    if isinstance(e, Neg):
        v = _rational_value(e.arg)
        return None if v is None else -v
    if isinstance(e, Div):
        a, b = _rational_value(e.num), _rational_value(e.den)
        return None if a is None or b is None or b == 0 else a / b
    return None


def parse_expr(src: str) -> Expr:
    """Parse a coefficient expression; raises ParseError with a byte offset."""
    if not isinstance(src, str):
        raise ParseError("expression must be a string", 0)
    return _Parser(src).parse()


def simplify(e: Expr) -> Expr:
    """Rebuild bottom-up through the smart constructors (constant folding only)."""
    if isinstance(e, (Const, Var, Sampled)):
        return e
    if isinstance(e, Add):
        return add(simplify(e.left), simplify(e.right))
    if isinstance(e, Neg):
        return neg(simplify(e.arg))
    if isinstance(e, Mul):
        return mul(simplify(e.left), simplify(e.right))
    if isinstance(e, Div):
        return div(simplify(e.num), simplify(e.den))
    if isinstance(e, Pow):
        return power(simplify(e.base), e.exponent)
    if isinstance(e, Func):
        return func(e.name, simplify(e.arg))
    raise TypeError(repr(e))


# -- TimeFn ----------------------------------------------------------------------


class TimeFn:
    """A function of time with an exact first derivative (and all higher ones)."""

    __slots__ = ("expr", "_f", "_d")

    def __init__(self, expr):
        self.expr = simplify(_lift(expr))
        self._f = compile_expr(self.expr)
        self._d = None

    @classmethod
    def parse(cls, src: str) -> "TimeFn":
        return cls(parse_expr(src))

    @classmethod
    def const(cls, c) -> "TimeFn":
        return cls(_lift(c))

    def __call__(self, t: float) -> float:
        return self._f(t)

    value = __call__

    def derivative(self) -> "TimeFn":
        if self._d is None:
            self._d = TimeFn(differentiate(self.expr))
        return self._d

    def deriv(self, t: float) -> float:
        return self.derivative()(t)

    @property
    def closed_form(self) -> bool:
        return is_closed_form(self.expr)

    def constant_value(self):
        return self.expr.value if isinstance(self.expr, Const) else None

    def source(self) -> str | None:
        return to_source(self.expr) if self.closed_form else None

    def describe(self) -> str:
        """Parseable source when closed-form, otherwise ``sampled:<expression>``."""
        return to_source(self.expr) if self.closed_form else f"sampled:{self}"

    def __str__(self):
        return to_source(self.expr)

    def __repr__(self):
        return f"TimeFn({self})"

    def _bin(self, other, op):
        return TimeFn(op(self.expr, _lift(other)))

    def __add__(self, o):
        return self._bin(o, add)

    def __radd__(self, o):
        return TimeFn(add(_lift(o), self.expr))

    def __sub__(self, o):
        return TimeFn(add(self.expr, neg(_lift(o))))

    def __rsub__(self, o):
        return TimeFn(add(_lift(o), neg(self.expr)))

    def __mul__(self, o):
        return self._bin(o, mul)

    def __rmul__(self, o):
        return TimeFn(mul(_lift(o), self.expr))

    def __truediv__(self, o):
        return self._bin(o, div)

    def __rtruediv__(self, o):
        return TimeFn(div(_lift(o), self.expr))

    def __neg__(self):
        return TimeFn(neg(self.expr))

    def __pow__(self, k):
        return TimeFn(power(self.expr, Fraction(k)))


def as_timefn(x) -> TimeFn:
    if isinstance(x, TimeFn):
        return x
    if isinstance(x, str):
        return TimeFn.parse(x)
    return TimeFn(_lift(x))


def grid(span, n: int = 1001) -> np.ndarray:
    return np.linspace(float(span[0]), float(span[1]), n)


def sup_abs(f: Callable[[float], float], span, n: int = 1001) -> float:
    return max(abs(f(t)) for t in grid(span, n))


def identically_zero(f: TimeFn, span, threshold: float = 1e-12) -> bool:
    """Grid test (1001 points) for the identically-zero preconditions."""
    return sup_abs(f, span) <= threshold


# -- quadrature ------------------------------------------------------------------

QUAD_CFG = odeint.IntegratorConfig(rtol=1e-12, atol=1e-14)


class _TwoSided:
    """Dense solution of ``y' = rhs(t, y)``, ``y(0) = y0`` on an interval around 0."""

    def __init__(self, rhs, y0, lo: float, hi: float, cfg=QUAD_CFG):
        self.rhs, self.y0, self.cfg = rhs, np.asarray(y0, dtype=float), cfg
        self.fwd = self.bwd = None
        self.lo, self.hi = 0.0, 0.0
        self.extend(lo, hi)

    def extend(self, lo: float, hi: float):
        if hi > self.hi:
            self.fwd = odeint.integrate(self.rhs, 0.0, self.y0, hi, self.cfg)
            self._check(self.fwd)
            self.hi = hi
        if lo < self.lo:
            rhs = self.rhs
            self.bwd = odeint.integrate(lambda s, y: -np.asarray(rhs(-s, y)), 0.0, self.y0, -lo, self.cfg)
            self._check(self.bwd)
            self.lo = lo

    @staticmethod
    def _check(traj):
        if not traj.completed:
            raise odeint.IntegrationError(f"auxiliary integration stopped early: {traj.reason.value}")

    def __call__(self, t: float) -> np.ndarray:
        if t > self.hi or t < self.lo:
            width = max(self.hi - self.lo, 1.0)
            self.extend(min(self.lo, t - 0.25 * width) if t < self.lo else self.lo,
                        max(self.hi, t + 0.25 * width) if t > self.hi else self.hi)
        if t >= 0:
            return self.fwd.at(t) if self.fwd is not None else self.y0
        return self.bwd.at(-t)


def integral(f, span=(0.0, 1.0), name: str | None = None) -> TimeFn:
    """Antiderivative ``t -> int_0^t f`` as a numeric-backed TimeFn with derivative f."""
    f = as_timefn(f)
    if is_const(f.expr):
        return TimeFn(mul(f.expr, T))
    ff = f._f
    table = _TwoSided(lambda t, y: (ff(t),), (0.0,), min(0.0, span[0]), max(0.0, span[1]))
    node = Sampled(name or f"int({f})", lambda t: float(table(t)[0]), f.expr)
    return TimeFn(node)


def cumint(f, t: float, cfg: odeint.IntegratorConfig = QUAD_CFG) -> float:
    """``int_0^t f`` through the shared integrator (state augmented with the integral)."""
    f = as_timefn(f)
    if t == 0:
        return 0.0
    if t > 0:
        tr = odeint.integrate(lambda s, y: (f(s),), 0.0, (0.0,), t, cfg)
        return float(tr.states[-1][0])
    tr = odeint.integrate(lambda s, y: (-f(-s),), 0.0, (0.0,), -t, cfg)
    return float(tr.states[-1][0])


def ode_backed(rhs, y0, span, names, derivs) -> list:
    """TimeFns for each component of the solution of an auxiliary ODE through t=0.

    ``derivs`` maps the list of component Exprs to the list of derivative
    Exprs (usually the right-hand side written with those Exprs), so the
    returned functions differentiate symbolically.
    """
    table = _TwoSided(rhs, y0, min(0.0, span[0]), max(0.0, span[1]))
    nodes: list = []
    box: dict = {}

    def deriv_of(i):
        def make():
            if "d" not in box:
                box["d"] = derivs(nodes)
            return _lift(box["d"][i])

        return make

    for i, name in enumerate(names):
        nodes.append(Sampled(name, (lambda k: lambda t: float(table(t)[k]))(i), deriv_of(i)))
    return [TimeFn(n) for n in nodes]


# -- monotone reparametrisations --------------------------------------------------


class NonMonotone(ValueError):
    pass


class MonotoneMap:
    """tau(t) = int_0^t xi with xi of constant sign, plus its inverse."""

    def __init__(self, xi: TimeFn, span, table: odeint.Trajectory | None, bwd: odeint.Trajectory | None):
        self.xi = xi
        self.span = (float(span[0]), float(span[1]))
        self._fwd = table
        self._bwd = bwd
        lo, hi = self.forward(self.span[0]), self.forward(self.span[1])
        self.tau_span = (min(lo, hi), max(lo, hi))
        self.sign = 1.0 if hi >= lo else -1.0
        self.inverse = lru_cache(maxsize=65536)(self._inverse)

    @property
    def is_identity(self) -> bool:
        return is_const(self.xi.expr, 1)

    def forward(self, t: float) -> float:
        if self.is_identity:
            return t
        if t >= 0:
            return float(self._fwd.at(t)[0]) if self._fwd is not None else 0.0
        return -float(self._bwd.at(-t)[0])

    __call__ = forward

    def _inverse(self, tau: float) -> float:
        if self.is_identity:
            return tau
        lo, hi = self.tau_span
        tol = 1e-12 * max(1.0, hi - lo)
        if tau < lo - tol or tau > hi + tol:
            raise ValueError(f"tau={tau} outside the mapped range [{lo}, {hi}]")
        a, b = self.span
        fa, fb = self.forward(a) - tau, self.forward(b) - tau
        if fa == 0:
            return a
        if fb == 0:
            return b
        if fa * fb > 0:
            return a if abs(fa) < abs(fb) else b
        return brentq(lambda t: self.forward(t) - tau, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def build_monotone(xi, span, cfg: odeint.IntegratorConfig = QUAD_CFG) -> MonotoneMap:
    """Tabulate tau(t) = int_0^t xi on ``span``; xi must keep one sign there.

    Monotonicity is certified on a 1001-point grid plus the integrator's
    accepted step times; this is a sampled check, not a proof.
    """
    xi = as_timefn(xi)
    lo, hi = float(span[0]), float(span[1])
    if not lo <= 0.0 <= hi or lo == hi:
        raise ValueError("span must contain t=0 and have positive length")
    pts = list(grid(span))
    fwd = bwd = None
    if not is_const(xi.expr, 1):
        if hi > 0:
            fwd = odeint.integrate(lambda t, y: (xi(t),), 0.0, (0.0,), hi, cfg)
            pts.extend(fwd.times.tolist())
        if lo < 0:
            bwd = odeint.integrate(lambda s, y: (xi(-s),), 0.0, (0.0,), -lo, cfg)
            pts.extend((-bwd.times).tolist())
    vals = np.array([xi(t) for t in pts])
    if np.any(np.abs(vals) < 1e-12):
        raise NonMonotone("reparametrisation rate vanishes on the interval")
    if np.any(np.sign(vals) != np.sign(vals[0])):
        raise NonMonotone("reparametrisation rate changes sign on the interval")
    return MonotoneMap(xi, span, fwd, bwd)


def reparametrize(f, mmap: MonotoneMap, name: str | None = None) -> TimeFn:
    """``tau -> f(t(tau))``; its derivative is ``(f'/xi)(t(tau))``."""
    f = as_timefn(f)
    if mmap.is_identity:
        return f
    if isinstance(f.expr, Const):
        return f
    ff = f._f
    inv = mmap.inverse
    node = Sampled(name or f"[{f}]o t(tau)", lambda tau: ff(inv(tau)),
                   lambda: reparametrize(f.derivative() / mmap.xi, mmap).expr)
    return TimeFn(node)
