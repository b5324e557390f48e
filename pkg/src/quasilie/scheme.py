"""Quasi-Lie scheme checks, the lower-triangular scheme group and its pushforward."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import symvf
from .models import GambierSpec, gambier_b_coeffs
from .symvf import VectorField, basis, coords_in_span, lie_bracket
from .tfun import TimeFn, as_timefn, grid


class VFSpace:
    """Named, ordered, linearly independent list of vector fields."""

    def __init__(self, name: str, gens: Sequence[VectorField], labels: Sequence[str] | None = None):
        gens = list(gens)
        if not gens:
            raise ValueError("a space needs at least one generator")
        if not symvf.independent(gens):
            raise ValueError(f"generators of {name} are linearly dependent")
        self.name = name
        self.gens = tuple(gens)
        self.labels = tuple(labels) if labels else tuple(f"{name}[{i}]" for i in range(len(gens)))

    def __len__(self):
        return len(self.gens)

    def __iter__(self):
        return iter(zip(self.labels, self.gens))

    def contains(self, f: VectorField):
        return coords_in_span(f, self.gens)

    def __repr__(self):
        return f"VFSpace({self.name}, dim={len(self)})"


def _named(name: str, ids: Sequence[str]) -> VFSpace:
    return VFSpace(name, [basis(i) for i in ids], ids)


def _line_field(coeffs: dict) -> VectorField:
    return VectorField([symvf.LaurentPoly(1, {(k,): c for k, c in coeffs.items()})])


def space(name: str, c0=Fraction(-1, 4)) -> VFSpace:
    """Spaces used throughout: V_G, W_G, V'_G, V0_KS2, sl3, V1, Abel_W, Abel_V."""
    if name == "V_G":
        return _named(name, [f"Y{i}" for i in range(1, 12)])
    if name == "W_G":
        return _named(name, ["Y4", "Y8", "Y11"])
    if name == "V'_G":
        return _named(name, [f"Y{i}" for i in range(1, 18)])
    if name == "V0_KS2":
        return VFSpace(name, symvf.ks2_basis(c0), ["X1", "X2", "X3"])
    if name == "sl3":
        return _named(name, [f"X{i}" for i in range(1, 9)])
    if name == "V1":
        z = {i: basis(f"Z{i}") for i in (1, 3, 5, 6)}
        return VFSpace(name, [z[1], z[3], z[1] + z[5], z[6]], ["Z1", "Z3", "Z1+Z5", "Z6"])
    if name == "W_lin":
        return _named(name, ["W1", "W2", "W3", "W4"])
    if name == "Abel_W":
        return VFSpace(name, [_line_field({0: 1}), _line_field({1: 1})], ["d/dx", "x d/dx"])
    if name == "Abel_V":
        return VFSpace(name, [_line_field({k: 1}) for k in range(4)],
                       ["d/dx", "x d/dx", "x^2 d/dx", "x^3 d/dx"])
    raise KeyError(f"unknown space {name!r}")


SPACE_NAMES = ("V_G", "W_G", "V'_G", "V0_KS2", "sl3", "V1", "W_lin", "Abel_W", "Abel_V")


# -- scheme check ----------------------------------------------------------------


@dataclass
class Condition:
    name: str
    passed: bool
    witnesses: list = field(default_factory=list)

    def to_json(self):
        return {"condition": self.name, "pass": self.passed, "witnesses": self.witnesses}


@dataclass
class CheckReport:
    w: str
    v: str
    conditions: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def witness_brackets(self) -> list:
        return [w["bracket"] for c in self.conditions for w in c.witnesses if "bracket" in w]

    def to_json(self):
        return {"W": self.w, "V": self.v, "pass": self.passed,
                "conditions": [c.to_json() for c in self.conditions]}


def check_scheme(w: VFSpace, v: VFSpace) -> CheckReport:
    """W inside V, [W,W] inside W, [W,V] inside V; every failing pair is reported."""
    inc = Condition("W subset V", True)
    for lab, f in w:
        if v.contains(f) is None:
            inc.passed = False
            inc.witnesses.append({"field": lab, "value": str(f)})
    ww = Condition("[W,W] subset W", True)
    wl = list(w)
    for i, (la, a) in enumerate(wl):
        for lb, b in wl[i + 1:]:
            br = lie_bracket(a, b)
            if w.contains(br) is None:
                ww.passed = False
                ww.witnesses.append({"bracket": f"[{la},{lb}]", "value": str(br)})
    wv = Condition("[W,V] subset V", True)
    for la, a in w:
        for lb, b in v:
            br = lie_bracket(a, b)
            if v.contains(br) is None:
                wv.passed = False
                wv.witnesses.append({"bracket": f"[{la},{lb}]", "value": str(br)})
    return CheckReport(w.name, v.name, [inc, ww, wv])


# -- scheme group ----------------------------------------------------------------


class FlowError(ValueError):
    pass


@dataclass(frozen=True)
class FlowElement:
    """(x, v) -> (alpha x, gamma x + delta v)."""

    alpha: TimeFn
    gamma: TimeFn
    delta: TimeFn

    def __post_init__(self):
        for k in ("alpha", "gamma", "delta"):
            object.__setattr__(self, k, as_timefn(getattr(self, k)))

    @classmethod
    def identity(cls) -> "FlowElement":
        return cls(1, 0, 1)

    def validate(self, span=None, tol: float = 1e-12) -> "FlowElement":
        if abs(self.alpha(0.0) - 1) > tol or abs(self.delta(0.0) - 1) > tol or abs(self.gamma(0.0)) > tol:
            raise FlowError("flow must start at the identity: alpha(0)=delta(0)=1, gamma(0)=0")
        if span is not None:
            for t in grid(span):
                if not (self.alpha(t) > 0 and self.delta(t) > 0):
                    raise FlowError(f"alpha and delta must stay positive (fails at t={t:.6g})")
        return self

    def matrix(self, t: float):
        return ((self.alpha(t), 0.0), (self.gamma(t), self.delta(t)))

    def matrix_dot(self, t: float):
        return ((self.alpha.deriv(t), 0.0), (self.gamma.deriv(t), self.delta.deriv(t)))

    def inverse(self) -> "FlowElement":
        return FlowElement(1 / self.alpha, -self.gamma / (self.alpha * self.delta), 1 / self.delta)

    def to_json(self, span=None, samples: int = 11):
        out = {k: getattr(self, k).describe() for k in ("alpha", "gamma", "delta")}
        if span is not None:
            ts = np.linspace(span[0], span[1], samples)
            out["samples"] = [[float(t), self.alpha(t), self.gamma(t), self.delta(t)] for t in ts]
        return out


def apply_flow(g: FlowElement, t: float, state) -> tuple:
    x, v = state
    return (g.alpha(t) * x, g.gamma(t) * x + g.delta(t) * v)


def compose_flows(g: FlowElement, h: FlowElement) -> FlowElement:
    """Pointwise product M_g M_h, i.e. apply h first."""
    return FlowElement(g.alpha * h.alpha, g.gamma * h.alpha + g.delta * h.gamma, g.delta * h.delta)


def transformed_coeffs(n, s, a0, da0, a1, a2, al, dal, ga, dga, de, dde) -> tuple:
    """The eleven transformed coefficients from jets of the data.

    Plain arithmetic only, so Fractions in give Fractions out.
    """
    return (
        al / de,
        (n - 1) * al / (n * de),
        a0 * (n + 2) / (n * al),
        a1 + dde / de + (2 - n) * ga / (n * de),
        (2 - n) * s * al / n,
        -a0 * a0 * de / (n * al ** 3),
        (de * da0 - a0 * a1 * de - (n + 2) * a0 * ga / n) / al ** 2,
        de / al * (n * a2 - 2 * s * a0 / n - ga * a1 / de - ga * ga / (n * de * de)
                   - ga * dde / (de * de) + dga / de),
        -s * (a1 * de + (2 - n) * ga / n),
        -s * s * al * de / n,
        dal / al - ga / de,
    )


def jets(spec: GambierSpec, g: FlowElement, t: float) -> dict:
    return dict(n=spec.n, s=float(spec.sigma), a0=spec.a0(t), da0=spec.a0.deriv(t), a1=spec.a1(t),
                a2=spec.a2(t), al=g.alpha(t), dal=g.alpha.deriv(t), ga=g.gamma(t), dga=g.gamma.deriv(t),
                de=g.delta(t), dde=g.delta.deriv(t))


def pushforward_coeffs(spec: GambierSpec, g: FlowElement, t: float) -> tuple:
    """(b1bar, ..., b11bar) of g_* X at time t."""
    return transformed_coeffs(**jets(spec, g, t))


def _slice(spec: GambierSpec, t: float) -> VectorField:
    return symvf.linear_combination(gambier_b_coeffs(spec, t), symvf.y_basis(10))


def pushforward_field(field_at, g: FlowElement, t: float) -> VectorField:
    """(g_* X)_t = M X_t(M^-1 p) + Mdot M^-1 p for any plane field X_t = field_at(t)."""
    m = g.matrix(t)
    if m[0][0] * m[1][1] == 0:
        raise FlowError(f"flow matrix singular at t={t}")
    return symvf.conjugate_linear(field_at(t), m, g.matrix_dot(t))


def pushforward_field_numeric(spec: GambierSpec, g: FlowElement, t: float) -> VectorField:
    return pushforward_field(lambda s: _slice(spec, s), g, t)


def pushforward_exact(spec: GambierSpec, g: FlowElement, t: float) -> tuple:
    """Both sides of the coefficient/field equivalence in exact arithmetic.

    Every jet is rationalised first, after which the coefficient formula and
    the conjugated field are computed without rounding.  Returns
    ``(formula_coeffs, field_coords)``; they agree exactly when the theory does.
    """
    j = {k: symvf.rationalize(v) if k != "n" else v for k, v in jets(spec, g, t).items()}
    n, s = j["n"], j["s"]
    b = (Fraction(1), Fraction(n - 1, n), j["a0"] * (n + 2) / n, j["a1"], -s * (n - 2) / n,
         -j["a0"] ** 2 / n, j["da0"] - j["a0"] * j["a1"], j["a2"] * n - 2 * j["a0"] * s / n,
         -j["a1"] * s, -s * s / n)
    x = symvf.linear_combination(b, symvf.y_basis(10))
    m = ((j["al"], Fraction(0)), (j["ga"], j["de"]))
    md = ((j["dal"], Fraction(0)), (j["dga"], j["dde"]))
    pushed = symvf.conjugate_linear(x, m, md)
    return transformed_coeffs(**j), coords_in_span(pushed, symvf.y_basis(11))


def numeric_coords(f: VectorField, gens: Sequence[VectorField], tol: float = 1e-9):
    """Least-squares coordinates of a float-coefficient field; None if the residual exceeds tol."""
    monos = sorted({(i, e) for g in list(gens) + [f] for i, c in enumerate(g.comps) for e, _ in c.terms})
    index = {m: k for k, m in enumerate(monos)}

    def vec(h):
        out = np.zeros(len(monos))
        for i, c in enumerate(h.comps):
            for e, val in c.terms:
                out[index[(i, e)]] = float(val)
        return out

    a = np.column_stack([vec(g) for g in gens])
    b = vec(f)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = np.max(np.abs(a @ sol - b)) if len(b) else 0.0
    scale = max(1.0, float(np.max(np.abs(b))) if len(b) else 1.0)
    return tuple(sol.tolist()) if resid <= tol * scale else None
