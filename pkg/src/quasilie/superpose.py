"""Superposition rules and closed solution formulas.

Every formula is evaluated together with its first two derivatives
(second-order jets) built from the particular solutions' states and their
equations, so residuals never rely on numerical differentiation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import odeint, tfun
from .models import GambierSpec, LinearLieSpec, rhs
from .odeint import Trajectory
from .tfun import TimeFn, as_timefn
from .transforms import TransformResult, to_second_riccati


class DegenerateDenominator(ValueError):
    pass


class NegativeRadicand(ValueError):
    def __init__(self, where: float, value: float):
        super().__init__(f"radicand {value:.3g} is not positive at {where:.6g}")
        self.where = where
        self.value = value


class WronskianDrift(ValueError):
    pass


class DegenerateSolutions(ValueError):
    pass


class DependentSolutions(ValueError):
    pass


@dataclass(frozen=True)
class Jet:
    """Value with first and second derivative."""

    v: float
    d1: float = 0.0
    d2: float = 0.0

    def __add__(self, o):
        o = _jet(o)
        return Jet(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d1, -self.d2)

    def __sub__(self, o):
        return self + (-_jet(o))

    def __rsub__(self, o):
        return _jet(o) - self

    def __mul__(self, o):
        o = _jet(o)
        return Jet(self.v * o.v, self.d1 * o.v + self.v * o.d1,
                   self.d2 * o.v + 2 * self.d1 * o.d1 + self.v * o.d2)

    __rmul__ = __mul__

    def recip(self):
        r = 1.0 / self.v
        return Jet(r, -self.d1 * r * r, (2 * self.d1 * self.d1 * r - self.d2) * r * r)

    def __truediv__(self, o):
        return self * _jet(o).recip()

    def __rtruediv__(self, o):
        return _jet(o) * self.recip()

    def sqrt(self):
        s = math.sqrt(self.v)
        d1 = self.d1 / (2 * s)
        return Jet(s, d1, (self.d2 - 2 * d1 * d1) / (2 * s))

    def compose(self, inner: "Jet") -> "Jet":
        """self is a jet in tau at tau(t); inner is the jet of tau(t)."""
        return Jet(self.v, self.d1 * inner.d1, self.d2 * inner.d1 ** 2 + self.d1 * inner.d2)


def _jet(x) -> Jet:
    return x if isinstance(x, Jet) else Jet(float(x))


def second_order_jet(traj: Trajectory, t: float) -> Jet:
    """Jet of the first component of a trajectory of y'' = F(t, y, y')."""
    s = traj.at(t)
    return Jet(s[0], s[1], traj.deriv(t)[1])


def timefn_jet(f: TimeFn, t: float) -> Jet:
    d = f.derivative()
    return Jet(f(t), d(t), d.deriv(t))


# -- Riccati rule ------------------------------------------------------------------


def riccati_sr(u1, u2, u3, k):
    """Fourth solution of a Riccati equation from three others and a constant k."""
    den = (u2 - u3) - k * (u3 - u1)
    if den == 0 or (isinstance(den, float) and abs(den) < 1e-300):
        raise DegenerateDenominator("(u2-u3) - k (u3-u1) vanishes")
    return (u1 * (u2 - u3) - k * u2 * (u3 - u1)) / den


def riccati_k(x, u1, u2, u3) -> float:
    """The constant k that makes riccati_sr reproduce x (inverse of the rule)."""
    return ((x - u1) * (u2 - u3)) / ((x - u2) * (u3 - u1))


# -- Milne-Pinney from oscillators ---------------------------------------------------


class _CheckedFormula:
    radicand_name = "radicand"

    def check_positive(self, points):
        for p in points:
            r = self.radicand(p).v
            if not r > 0:
                raise NegativeRadicand(float(p), r)


class MPFromOscillators(_CheckedFormula):
    def __init__(self, z1: Trajectory, z2: Trajectory, k1, k2, sign, a00):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        self.z1, self.z2 = z1, z2
        w = [self._wronskian(t) for t in z1.times]
        self.W = w[0]
        if abs(self.W) < 1e-12:
            raise DependentSolutions("oscillator solutions are linearly dependent")
        dw = max(abs(x - self.W) for x in w)
        if dw > 1e-9 * max(1.0, abs(self.W)):
            raise WronskianDrift(f"Wronskian varies by {dw:.3g}")
        c2 = k1 * k2 + a00 ** 2 / (4 * self.W ** 2)
        if c2 < 0:
            raise NegativeRadicand(0.0, c2)
        self.k1, self.k2 = k1, k2
        self.C = sign * math.sqrt(c2)
        lo, hi = max(z1.t0, z2.t0), min(z1.t1, z2.t1)
        self.domain = (lo, hi)
        self.check_positive(np.unique(np.concatenate([np.linspace(lo, hi, 201), z1.times])))

    def _wronskian(self, t):
        a, b = self.z1.at(t), self.z2.at(t)
        return a[0] * b[1] - b[0] * a[1]

    def radicand(self, tau) -> Jet:
        z1, z2 = second_order_jet(self.z1, tau), second_order_jet(self.z2, tau)
        return self.k1 * z1 * z1 + self.k2 * z2 * z2 + 2 * self.C * z1 * z2

    def jet(self, tau) -> Jet:
        return self.radicand(tau).sqrt()

    def __call__(self, tau) -> float:
        return self.jet(tau).v


def mp_from_oscillators(z1, z2, k1, k2, sign, a00) -> MPFromOscillators:
    """y = sqrt(k1 z1^2 + k2 z2^2 + 2 C z1 z2), C = sign sqrt(k1 k2 + a00^2/(4 W^2))."""
    return MPFromOscillators(z1, z2, k1, k2, sign, a00)


def mp_residual(sol, omega, kcoef, tau) -> float:
    y = sol.jet(tau)
    return y.d2 + as_timefn(omega)(tau) * y.v + kcoef / y.v ** 3


FINE = odeint.IntegratorConfig(rtol=1e-12, atol=1e-14)


def oscillator_pair(omega, span, z1=(1.0, 0.0), z2=(0.0, 1.0), cfg=FINE):
    """Two solutions of z'' = -omega(tau) z on [0, span]."""
    omega = as_timefn(omega)
    f = lambda t, y: (y[1], -omega(t) * y[0])
    return (odeint.integrate(f, 0.0, z1, span, cfg, names=("z", "dz")),
            odeint.integrate(f, 0.0, z2, span, cfg, names=("z", "dz")))


# -- Gambier from oscillators ----------------------------------------------------------


class GambierFromOscillators:
    """x(t) = 1 / (alpha(t) Q(tau(t))) with Q the squared Milne-Pinney solution."""

    def __init__(self, transform: TransformResult, mp: MPFromOscillators):
        self.tr = transform
        self.mp = mp
        self.alpha = transform.flow.alpha
        self.xi = transform.reparam.xi

    def jet(self, t) -> Jet:
        tau = self.tr.reparam(t)
        q = self.mp.radicand(tau).compose(Jet(tau, self.xi(t), self.xi.deriv(t)))
        return (timefn_jet(self.alpha, t) * q).recip()

    def __call__(self, t) -> float:
        return self.jet(t).v

    def initial_state(self, t: float = 0.0) -> tuple:
        j = self.jet(t)
        return (j.v, j.d1)


def gambier_general_solution(spec: GambierSpec, transform: TransformResult, z1, z2, k1, k2, sign):
    if transform.kind != "to-ks2":
        raise ValueError("needs the result of to_ks2")
    return GambierFromOscillators(transform, mp_from_oscillators(z1, z2, k1, k2, sign, spec.a00))


def gambier_residual(spec: GambierSpec, sol, t) -> float:
    j = sol.jet(t)
    return j.d2 - rhs(spec, t, (j.v, j.d1))[1]


# -- Milne-Pinney from three Riccati solutions -------------------------------------------


class MPFromRiccati(_CheckedFormula):
    """The three-solution formula for y'' = -omega y - a00^2/(4 y^3).

    Solutions x_i solve x' = -omega - x^2.  The numerator carries
    a00^2 (x2 - x3)^2 / 4; see the project notes for why the square is needed.
    """

    def __init__(self, x1, x2, x3, k1, k2, a00, omega):
        if k1 == k2:
            raise DegenerateSolutions("k1 and k2 must differ")
        self.xs = (x1, x2, x3)
        self.k1, self.k2, self.A2 = k1, k2, a00 * a00
        self.omega = as_timefn(omega)
        lo = max(x.t0 for x in self.xs)
        hi = min(x.t1 for x in self.xs)
        self.domain = (lo, hi)
        pts = np.unique(np.concatenate([np.linspace(lo, hi, 201)] + [x.times for x in self.xs]))
        for p in pts:
            a, b, c = (x.at(p)[0] for x in self.xs)
            gap = min(abs(a - b), abs(b - c), abs(a - c))
            if gap < 1e-9:
                raise DegenerateSolutions(f"particular solutions meet at {p:.6g}")
        self.check_positive(pts)

    def _xjet(self, x: Trajectory, tau) -> Jet:
        v = x.at(tau)[0]
        d1 = -self.omega(tau) - v * v
        return Jet(v, d1, -self.omega.deriv(tau) - 2 * v * d1)

    def radicand(self, tau) -> Jet:
        x1, x2, x3 = (self._xjet(x, tau) for x in self.xs)
        lin = self.k1 * (x1 - x2) - self.k2 * (x1 - x3)
        num = lin * lin - (self.A2 / 4) * (x2 - x3) * (x2 - x3)
        den = (self.k2 - self.k1) * (x2 - x3) * (x2 - x1) * (x1 - x3)
        return num / den

    def jet(self, tau) -> Jet:
        return self.radicand(tau).sqrt()

    def __call__(self, tau) -> float:
        return self.jet(tau).v


def mp_from_riccati(x1, x2, x3, k1, k2, a00, omega) -> MPFromRiccati:
    return MPFromRiccati(x1, x2, x3, k1, k2, a00, omega)


# -- mixed rule through the linear system ------------------------------------------------


class MixedSolution:
    """xb = sum l_i vy_i / sum l_i y_i and its tau-derivative."""

    def __init__(self, states: Callable, derivs: Callable, lambdas, domain):
        self.states = states
        self.derivs = derivs
        self.lam = np.asarray(lambdas, dtype=float)
        self.domain = domain

    def _parts(self, tau):
        s = self.lam @ self.states(tau)
        d = self.lam @ self.derivs(tau)
        return s, d

    def jet(self, tau) -> Jet:
        (y, vy, ay), (_, _, day) = self._parts(tau)
        return Jet(vy, ay, day) / Jet(y, vy, ay)

    def __call__(self, tau) -> float:
        (y, vy, _), _ = self._parts(tau)
        return vy / y

    def v(self, tau) -> float:
        (y, vy, ay), _ = self._parts(tau)
        return (ay * y - vy * vy) / (y * y)

    def state(self, tau) -> tuple:
        return (self(tau), self.v(tau))


def mixed_sr(triples: Sequence[Trajectory], lambdas, check_points: int = 201) -> MixedSolution:
    """Mixed rule from three solutions of y' = vy, vy' = ay, ay' = f y + g vy + h ay."""
    if len(triples) != 3:
        raise ValueError("need exactly three solutions of the linear system")
    lam = np.asarray(lambdas, dtype=float)
    if not np.any(lam != 0):
        raise ValueError("lambdas must not all vanish")
    lo = max(tr.t0 for tr in triples)
    hi = min(tr.t1 for tr in triples)

    def states(tau):
        return np.array([tr.at(tau) for tr in triples])

    def derivs(tau):
        return np.array([tr.deriv(tau) for tr in triples])

    if abs(np.linalg.det(states(lo))) < 1e-9:
        raise DependentSolutions("solutions of the linear system are dependent")
    sol = MixedSolution(states, derivs, lam, (lo, hi))
    pts = np.unique(np.concatenate([np.linspace(lo, hi, check_points)] + [tr.times for tr in triples]))
    dens = np.array([float(lam @ states(p)[:, 0]) for p in pts])
    bad = np.flatnonzero((np.abs(dens) < 1e-12) | (np.sign(dens) != np.sign(dens[0])))
    if bad.size:
        raise DegenerateDenominator(f"sum lambda_i y_i vanishes near {pts[bad[0]]:.6g}")
    return sol


def linear_basis(spec: LinearLieSpec, tau1: float, cfg=odeint.DEFAULT) -> list:
    """Solutions from (1,0,0), (0,1,0), (0,0,1) on [0, tau1]."""
    f = lambda t, y: rhs(spec, t, y)
    return [odeint.integrate(f, 0.0, e, tau1, cfg, names=("y", "vy", "ay"))
            for e in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))]


def sr_residual(sr, sol, tau) -> float:
    """Residual of x'' = -(3 x x' + x^3) + f + g x + h (x^2 + x') along a jet-valued solution."""
    j = sol.jet(tau)
    return j.d2 - rhs(sr, tau, (j.v, j.d1))[1]


# -- exact solutions for n = 1 --------------------------------------------------------


def easy_alpha(spec: GambierSpec, span) -> TimeFn:
    """alpha = (-a0 exp(-int a1))^(1/3): the solution with alpha(0)=1 of
    a1 = a0'/a0 - 3 alpha'/alpha when a0(0) = -1."""
    return (-spec.a0 * TimeFn(tfun.exp(-tfun.integral(spec.a1, span, name="int(a1)").expr))) ** Fraction(1, 3)


class ExactN1:
    def __init__(self, transform: TransformResult, basis: list, lambdas):
        self.tr = transform
        self.alpha = transform.flow.alpha
        self.xi = transform.reparam.xi
        self.mixed = MixedSolution(lambda tau: np.array([b.at(tau) for b in basis]),
                                   lambda tau: np.array([b.deriv(tau) for b in basis]),
                                   lambdas, (0.0, basis[0].t1))

    def _xbar(self, tau) -> Jet:
        return self.mixed.jet(tau)

    def xbar(self, tau) -> float:
        return self._xbar(tau).v

    def jet(self, t) -> Jet:
        tau = self.tr.reparam(t)
        xb = self._xbar(tau).compose(Jet(tau, self.xi(t), self.xi.deriv(t)))
        return xb / timefn_jet(self.alpha, t)

    def __call__(self, t) -> float:
        return self.jet(t).v

    def initial_state(self, t: float = 0.0) -> tuple:
        j = self.jet(t)
        return (j.v, j.d1)


def exact_gambier_n1(spec: GambierSpec, span, c1: float = 0.0, c2: float = 1.0) -> ExactN1:
    """General solution of an n=1, sigma=0, a0(0)=-1 Gambier equation.

    alpha is fixed so that the x^2 + x' coefficient of the second-order
    Riccati target vanishes; the target x'' = -3 x x' - x^3 + g x is then
    linearised by x = vy/y with y''' = g y', whose basis solutions from
    (1,0,0), (0,1,0), (0,0,1) are combined with lambda = (c2, c1, 1).
    """
    if span[0] != 0:
        raise ValueError("span must start at t=0")
    alpha = easy_alpha(spec, span)
    tr = to_second_riccati(spec, alpha, span)
    lin = LinearLieSpec.from_second_riccati(tr.target)
    basis = linear_basis(lin, tr.reparam.tau_span[1], FINE)
    return ExactN1(tr, basis, (c2, c1, 1.0))


def direct_deviation(spec: GambierSpec, sol, t1: float, samples: int = 101, cfg=odeint.DEFAULT) -> float:
    """sup |x_formula - x_integrated| on [0, t1] from the formula's own initial state."""
    from .models import solve

    tr = solve(spec, 0.0, sol.initial_state(0.0), t1, cfg)
    if not tr.completed:
        raise odeint.IntegrationError(f"direct integration stopped: {tr.reason.value}")
    return max(abs(sol(t) - tr.at(t)[0]) for t in np.linspace(0.0, t1, samples))
