"""Equation families: Gambier, KS2, Milne-Pinney, Riccati, second-order Riccati.

State conventions, shared by every module:

* Gambier, KS2 and second-order Riccati: ``(x, v)`` with ``v = dx/dt``;
* Milne-Pinney: ``(y, dy/dtau)``;
* Riccati: ``(x,)``;
* the third-order linear system used by the mixed superposition rule:
  ``(y, vy, ay)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import symvf
from .tfun import TimeFn, as_timefn


class DomainViolation(ValueError):
    """State on the excluded set (x = 0 for Gambier/KS2, y <= 0 for Milne-Pinney)."""


class SchemaError(ValueError):
    """Malformed model description (missing keys, bad types, n = 0, ...)."""


def _num(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            raise SchemaError(f"not a number: {x!r}") from None
    raise SchemaError(f"not a number: {x!r}")


def _expr_out(f: TimeFn):
    return f.describe()


def _json_num(x):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else float(x)
    return x


# -- Gambier -------------------------------------------------------------------


@dataclass(frozen=True)
class GambierSpec:
    a0: TimeFn
    a1: TimeFn
    a2: TimeFn
    sigma: Fraction | float = Fraction(0)
    n: int = -2

    def __post_init__(self):
        for k in ("a0", "a1", "a2"):
            object.__setattr__(self, k, as_timefn(getattr(self, k)))
        object.__setattr__(self, "sigma", _num(self.sigma))
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise SchemaError("n must be an integer")
        object.__setattr__(self, "n", int(self.n))
        if self.n == 0:
            raise SchemaError("n must be nonzero")
        if self.a0(0.0) == 0:
            raise SchemaError("a0(0) must be nonzero")

    @property
    def a00(self) -> float:
        return self.a0(0.0)

    def replace(self, **kw) -> "GambierSpec":
        d = dict(a0=self.a0, a1=self.a1, a2=self.a2, sigma=self.sigma, n=self.n)
        d.update(kw)
        return GambierSpec(**d)

    @classmethod
    def from_json(cls, d: dict) -> "GambierSpec":
        missing = [k for k in ("a0", "a1", "a2", "n") if k not in d]
        if missing:
            raise SchemaError(f"Gambier spec missing {', '.join(missing)}")
        return cls(d["a0"], d["a1"], d["a2"], d.get("sigma", 0), d["n"])

    def to_json(self) -> dict:
        return {"a0": _expr_out(self.a0), "a1": _expr_out(self.a1), "a2": _expr_out(self.a2),
                "sigma": _json_num(self.sigma), "n": self.n}


def gambier_b_coeffs(spec: GambierSpec, t: float) -> tuple:
    """(b1, ..., b10) of the decomposition X = sum b_i Y_i at time t."""
    n, s = spec.n, float(spec.sigma)
    a0, a1, a2 = spec.a0(t), spec.a1(t), spec.a2(t)
    da0 = spec.a0.deriv(t)
    return (
        1.0,
        (n - 1) / n,
        a0 * (n + 2) / n,
        a1,
        -s * (n - 2) / n,
        -a0 * a0 / n,
        da0 - a0 * a1,
        a2 * n - 2 * a0 * s / n,
        -a1 * s,
        -s * s / n,
    )


def gambier_field_at(spec: GambierSpec, t: float) -> symvf.VectorField:
    """Time slice of the Gambier field with coefficients rationalised at 1e-12."""
    b = [symvf.rationalize(c) for c in gambier_b_coeffs(spec, t)]
    return symvf.linear_combination(b, symvf.y_basis(10))


def _plane_rhs(b, x, v):
    if x == 0:
        raise DomainViolation("x = 0 is outside the punctured plane")
    ix = 1.0 / x
    dv = (b[1] * v * v * ix + b[2] * x * v + b[3] * v + b[4] * v * ix + b[5] * x ** 3
          + b[6] * x * x + b[7] * x + b[8] + b[9] * ix)
    return (v * b[0], dv)


# -- other families ------------------------------------------------------------------


@dataclass(frozen=True)
class KS2Spec:
    """x'' = 3/(2x) x'^2 - 2 c0 x^3 + 2 omega x."""

    c0: float
    omega: TimeFn

    def __post_init__(self):
        object.__setattr__(self, "c0", _num(self.c0))
        object.__setattr__(self, "omega", as_timefn(self.omega))

    @classmethod
    def from_json(cls, d):
        try:
            return cls(d["c0"], d["omega"])
        except KeyError as e:
            raise SchemaError(f"KS2 spec missing {e.args[0]}") from None

    def to_json(self):
        return {"c0": _json_num(self.c0), "omega": _expr_out(self.omega)}


@dataclass(frozen=True)
class MPSpec:
    """y'' = -omega y - kcoef / y^3."""

    omega: TimeFn
    kcoef: float

    def __post_init__(self):
        object.__setattr__(self, "omega", as_timefn(self.omega))
        object.__setattr__(self, "kcoef", _num(self.kcoef))
        if self.kcoef < 0:
            raise SchemaError("kcoef must be non-negative")

    @classmethod
    def from_json(cls, d):
        try:
            return cls(d["omega"], d["kcoef"])
        except KeyError as e:
            raise SchemaError(f"Milne-Pinney spec missing {e.args[0]}") from None

    def to_json(self):
        return {"omega": _expr_out(self.omega), "kcoef": _json_num(self.kcoef)}


@dataclass(frozen=True)
class RiccatiSpec:
    """x' = b1 + b2 x + b3 x^2."""

    b1: TimeFn
    b2: TimeFn
    b3: TimeFn

    def __post_init__(self):
        for k in ("b1", "b2", "b3"):
            object.__setattr__(self, k, as_timefn(getattr(self, k)))

    @classmethod
    def from_json(cls, d):
        try:
            return cls(d["b1"], d["b2"], d["b3"])
        except KeyError as e:
            raise SchemaError(f"Riccati spec missing {e.args[0]}") from None

    def to_json(self):
        return {k: _expr_out(getattr(self, k)) for k in ("b1", "b2", "b3")}


@dataclass(frozen=True)
class SecondRiccatiSpec:
    """x'' = -(3 x x' + x^3) + f + g x + h (x^2 + x')."""

    f: TimeFn
    g: TimeFn
    h: TimeFn

    def __post_init__(self):
        for k in ("f", "g", "h"):
            object.__setattr__(self, k, as_timefn(getattr(self, k)))

    @classmethod
    def from_json(cls, d):
        try:
            return cls(d["f"], d["g"], d["h"])
        except KeyError as e:
            raise SchemaError(f"second-order Riccati spec missing {e.args[0]}") from None

    def to_json(self):
        return {k: _expr_out(getattr(self, k)) for k in ("f", "g", "h")}


@dataclass(frozen=True)
class LinearLieSpec:
    """y' = vy, vy' = ay, ay' = f y + g vy + h ay.

    With x = vy / y this linearises the second-order Riccati system with the
    same (f, g, h).
    """

    f: TimeFn
    g: TimeFn
    h: TimeFn

    def __post_init__(self):
        for k in ("f", "g", "h"):
            object.__setattr__(self, k, as_timefn(getattr(self, k)))

    @classmethod
    def from_second_riccati(cls, sr: SecondRiccatiSpec) -> "LinearLieSpec":
        return cls(sr.f, sr.g, sr.h)


MODEL_TYPES = {
    "gambier": GambierSpec,
    "ks2": KS2Spec,
    "mp": MPSpec,
    "riccati": RiccatiSpec,
    "riccati2": SecondRiccatiSpec,
}

STATE_NAMES = {
    GambierSpec: ("x", "v"),
    KS2Spec: ("x", "v"),
    MPSpec: ("y", "dy"),
    RiccatiSpec: ("x",),
    SecondRiccatiSpec: ("x", "v"),
    LinearLieSpec: ("y", "vy", "ay"),
}


def model_from_json(d: dict):
    if not isinstance(d, dict) or "family" not in d:
        raise SchemaError("model must be an object with a 'family' key")
    fam = d["family"]
    if fam not in MODEL_TYPES:
        raise SchemaError(f"unknown family {fam!r}; expected one of {sorted(MODEL_TYPES)}")
    return MODEL_TYPES[fam].from_json(d)


def model_to_json(m) -> dict:
    fam = next(k for k, v in MODEL_TYPES.items() if isinstance(m, v))
    return {"family": fam, **m.to_json()}


def guard_indices(model) -> tuple:
    """Coordinates watched by the integrator's singularity guard."""
    if isinstance(model, (GambierSpec, KS2Spec, MPSpec)):
        return (0,)
    return ()


def rhs(model, t: float, state):
    """Right-hand side of the first-order form of ``model``."""
    if isinstance(model, GambierSpec):
        x, v = state
        return _plane_rhs(gambier_b_coeffs(model, t), x, v)
    if isinstance(model, KS2Spec):
        x, v = state
        if x == 0:
            raise DomainViolation("x = 0 is outside the punctured plane")
        return (v, 1.5 * v * v / x - 2 * float(model.c0) * x ** 3 + 2 * model.omega(t) * x)
    if isinstance(model, MPSpec):
        y, dy = state
        if not y > 0:
            raise DomainViolation("Milne-Pinney state requires y > 0")
        return (dy, -model.omega(t) * y - float(model.kcoef) / y ** 3)
    if isinstance(model, RiccatiSpec):
        (x,) = state
        return (model.b1(t) + model.b2(t) * x + model.b3(t) * x * x,)
    if isinstance(model, SecondRiccatiSpec):
        x, v = state
        return (v, -(3 * x * v + x ** 3) + model.f(t) + model.g(t) * x + model.h(t) * (x * x + v))
    if isinstance(model, LinearLieSpec):
        y, vy, ay = state
        return (vy, ay, model.f(t) * y + model.g(t) * vy + model.h(t) * ay)
    raise TypeError(f"unsupported model {type(model).__name__}")


def rhs_fn(model):
    """Closure ``(t, state) -> derivative`` suitable for :func:`odeint.integrate`."""
    return lambda t, y: rhs(model, t, y)


def solve(model, t0, state0, t1, cfg=None, names=None):
    from . import odeint

    cfg = cfg or odeint.DEFAULT
    if t1 >= t0:
        return odeint.integrate(rhs_fn(model), t0, state0, t1, cfg, guard=guard_indices(model),
                                names=names or STATE_NAMES.get(type(model)))
    raise ValueError("t1 must exceed t0")


def ks2_from_gambier(spec: GambierSpec) -> KS2Spec:
    """The KS2 equation a Gambier spec already is when n=-2, sigma=0, a1=0, a0 constant."""
    a0 = spec.a0.constant_value()
    if spec.n != -2 or spec.sigma != 0 or a0 is None or spec.a1.constant_value() != 0:
        raise ValueError("needs n=-2, sigma=0, a1=0 and constant a0")
    return KS2Spec(-Fraction(a0) ** 2 / 4 if isinstance(a0, Fraction) else -a0 * a0 / 4, -spec.a2)


def is_finite(*vals) -> bool:
    return all(math.isfinite(v) for v in vals)
