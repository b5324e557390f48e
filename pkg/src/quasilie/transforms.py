"""Canonical reduction, Gambier -> KS2 -> Milne-Pinney, and Gambier -> second-order Riccati."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import odeint
from .models import (GambierSpec, KS2Spec, MPSpec, SecondRiccatiSpec, gambier_b_coeffs,
                     model_to_json, solve)
from .scheme import FlowElement, FlowError, apply_flow, pushforward_coeffs
from .tfun import (MonotoneMap, TimeFn, as_timefn, build_monotone, exp, grid, identically_zero,
                   integral, reparametrize, sup_abs)

TOL = 1e-9
ZERO_TOL = 1e-12
CHECK_POINTS = 41


class ConditionFailed(ValueError):
    def __init__(self, condition: str, residual: float, detail: str = ""):
        msg = f"condition {condition!r} violated (residual {residual:.3g})"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.condition = condition
        self.residual = residual


class Unreducible(ValueError):
    pass


@dataclass
class TransformResult:
    kind: str
    source: GambierSpec
    flow: FlowElement
    reparam: MonotoneMap
    target: object
    residuals: dict = field(default_factory=dict)

    @property
    def span(self):
        return self.reparam.span

    def forward(self, t: float, state) -> tuple:
        """Source state at t -> (tau, target state)."""
        return self.reparam(t), apply_flow(self.flow, t, state)

    def backward(self, tau: float, state) -> tuple:
        t = self.reparam.inverse(tau)
        return t, apply_flow(self.flow.inverse(), t, state)

    def to_json(self, samples: int = 11) -> dict:
        return {
            "kind": self.kind,
            "span": list(self.span),
            "tau_span": list(self.reparam.tau_span),
            "flow": self.flow.to_json(self.span, samples),
            "xi": self.reparam.xi.describe(),
            "target": model_to_json(self.target),
            "residuals": dict(self.residuals),
        }


def _check_alpha(alpha, span) -> TimeFn:
    alpha = as_timefn(1 if alpha is None else alpha)
    if abs(alpha(0.0) - 1) > ZERO_TOL:
        raise ConditionFailed("alpha(0)=1", abs(alpha(0.0) - 1))
    lo = min(alpha(t) for t in grid(span))
    if not lo > 0:
        raise ConditionFailed("alpha>0", -lo)
    return alpha


def _coefficient_mismatch(spec, flow, mmap, target_coeffs, span) -> float:
    """sup over a grid of |bbar_i / xi - target_i|, target evaluated at tau(t)."""
    worst = 0.0
    for t in grid(span, CHECK_POINTS):
        bbar = pushforward_coeffs(spec, flow, t)
        xi = bbar[0]
        want = target_coeffs(mmap(t))
        for got, w in zip(bbar, want):
            worst = max(worst, abs(got / xi - w))
    return worst


def _finish(kind, spec, flow, mmap, target, coeffs, span, residuals) -> TransformResult:
    mis = _coefficient_mismatch(spec, flow, mmap, coeffs, span)
    residuals["coefficient_mismatch"] = float(mis)
    if mis > TOL:
        raise ConditionFailed("coefficient_mismatch", mis, "transformed system does not have the target form")
    return TransformResult(kind, spec, flow, mmap, target, residuals)


def _gambier_coeffs11(spec: GambierSpec):
    return lambda tau: tuple(gambier_b_coeffs(spec, tau)) + (0.0,)


# -- canonical reduction --------------------------------------------------------


def reduce_a1(spec: GambierSpec, span) -> TransformResult:
    """Remove the a1 term by x -> alpha x with alpha = exp(int n a1/(n-2))."""
    n = spec.n
    if identically_zero(spec.a1, span, ZERO_TOL):
        flow = FlowElement.identity()
        mmap = build_monotone(1, span)
        target = spec.replace(a1=0)
        return _finish("reduce", spec, flow, mmap, target, _gambier_coeffs11(target), span,
                       {"a1_sup": sup_abs(spec.a1, span)})
    if n == 2:
        raise Unreducible("a flow removing a1 does not exist for n=2 when a1 is not identically zero")
    rate = spec.a1 * n / (n - 2)
    alpha = TimeFn(exp(integral(rate, span, name="int(n*a1/(n-2))")))
    flow = FlowElement(alpha, rate, 1)
    mmap = build_monotone(alpha, span)
    a2bar = (spec.a2 - spec.a1 * spec.a1 * (n - 1) / (n - 2) ** 2 + spec.a1.derivative() / (n - 2)) / (alpha * alpha)
    target = GambierSpec(reparametrize(spec.a0 / (alpha * alpha), mmap, "a0bar"), 0,
                         reparametrize(a2bar, mmap, "a2bar"), spec.sigma, n)
    return _finish("reduce", spec, flow, mmap, target, _gambier_coeffs11(target), span, {})


# -- KS2 and Milne-Pinney -------------------------------------------------------


@dataclass
class ConditionReport:
    residuals: dict

    @property
    def passed(self) -> bool:
        return all(r <= TOL for r in self.residuals.values())

    @property
    def failed(self) -> list:
        return [k for k, r in self.residuals.items() if r > TOL]

    def to_json(self):
        return {"pass": self.passed, "residuals": dict(self.residuals)}


def check_ks2_conditions(spec: GambierSpec, span) -> ConditionReport:
    da0 = spec.a0.derivative()
    rel = sup_abs(lambda t: spec.a0(t) * spec.a1(t) - da0(t), span)
    return ConditionReport({"n+2": float(abs(spec.n + 2)), "sigma": float(abs(spec.sigma)),
                            "a0*a1-da0/dt": rel})


def _require(report: ConditionReport):
    for k in report.failed:
        raise ConditionFailed(k, report.residuals[k])


def ks2_frequency(spec: GambierSpec, flow: FlowElement) -> TimeFn:
    """omega(t) of the KS2 target, still as a function of the source time."""
    al, ga, de, a0 = flow.alpha, flow.gamma, flow.delta, spec.a0
    inner = (spec.a2 * 2 + ga * a0.derivative() / (a0 * de) - ga * ga / (de * de * 2)
             - ga.derivative() / de + ga * de.derivative() / (de * de))
    return -(de * de) / (al * al * 2) * inner


def to_ks2(spec: GambierSpec, alpha=None, span=(0.0, 1.0)) -> TransformResult:
    _require(check_ks2_conditions(spec, span))
    alpha = _check_alpha(alpha, span)
    a00 = spec.a00
    delta = alpha * alpha * a00 / spec.a0
    gamma = alpha * a00 / spec.a0 * alpha.derivative()
    lo = min(delta(t) for t in grid(span))
    if not lo > 0:
        raise ConditionFailed("delta>0", -lo, "alpha^2 a0(0)/a0 must stay positive")
    flow = FlowElement(alpha, gamma, delta)
    mmap = build_monotone(alpha / delta, span)
    omega_t = ks2_frequency(spec, flow)
    c0 = -a00 * a00 / 4
    target = KS2Spec(c0, reparametrize(omega_t, mmap, "omega"))

    def coeffs(tau):
        return (1.0, 1.5, 0, 0, 0, -2 * c0, 0, 2 * target.omega(tau), 0, 0, 0)

    return _finish("to-ks2", spec, flow, mmap, target, coeffs, span, check_ks2_conditions(spec, span).residuals)


def ks2_to_mp(ks2: KS2Spec) -> MPSpec:
    return MPSpec(ks2.omega, -ks2.c0)


def ks2_state_to_mp(state) -> tuple:
    x, v = state
    if not x > 0:
        raise ValueError("the Milne-Pinney change of variables needs x > 0")
    return (x ** -0.5, -0.5 * v * x ** -1.5)


def mp_state_to_ks2(state) -> tuple:
    y, dy = state
    return (1 / (y * y), -2 * dy / y ** 3)


# -- second-order Riccati --------------------------------------------------------


def second_riccati_coeffs(spec: GambierSpec, alpha: TimeFn) -> tuple:
    """(b1bar, b4bar, b8bar) for the n=1 scheme as functions of t."""
    a0, a1, a2 = spec.a0, spec.a1, spec.a2
    da = alpha.derivative()
    b1 = -a0 / alpha
    b4 = a1 - a0.derivative() / a0 + da * 3 / alpha
    b8 = -a2 * alpha / a0 + a1 * da / a0 + da * da * 2 / (a0 * alpha) - da.derivative() / a0
    return b1, b4, b8


def to_second_riccati(spec: GambierSpec, alpha=None, span=(0.0, 1.0)) -> TransformResult:
    """Map an n=1, sigma=0, a0(0)=-1 Gambier equation to a second-order Riccati Lie system.

    The target is x'' = -3 x x' - x^3 + g x + h (x^2 + x') with
    g = b8bar/b1bar and h = b4bar/b1bar.
    """
    if spec.n != 1:
        raise ConditionFailed("n=1", float(abs(spec.n - 1)))
    if spec.sigma != 0:
        raise ConditionFailed("sigma=0", float(abs(spec.sigma)))
    if abs(spec.a00 + 1) > ZERO_TOL:
        raise ConditionFailed("a0(0)=-1", abs(spec.a00 + 1))
    hi = max(spec.a0(t) for t in grid(span))
    if not hi < 0:
        raise ConditionFailed("a0<0", hi)
    alpha = _check_alpha(alpha, span)
    delta = -(alpha * alpha) / spec.a0
    gamma = delta * alpha.derivative() / alpha
    flow = FlowElement(alpha, gamma, delta)
    mmap = build_monotone(-spec.a0 / alpha, span)
    b1, b4, b8 = second_riccati_coeffs(spec, alpha)
    g = reparametrize(b8 / b1, mmap, "g")
    h = reparametrize(b4 / b1, mmap, "h")
    target = SecondRiccatiSpec(0, g, h)

    def coeffs(tau):
        hv, gv = h(tau), g(tau)
        return (1.0, 0, -3.0, hv, 0, -1.0, hv, gv, 0, 0, 0)

    return _finish("to-riccati2", spec, flow, mmap, target, coeffs, span,
                   {"n-1": 0.0, "sigma": 0.0, "a0(0)+1": abs(spec.a00 + 1)})


# -- trajectory transport --------------------------------------------------------


def transport_deviation(result: TransformResult, state0, tau_length: float = 1.0,
                        samples: int = 101, cfg: odeint.IntegratorConfig = odeint.DEFAULT,
                        mp: bool = False) -> float:
    """Integrate source and target, map the source through the transform, compare.

    Returns the sup-norm deviation over ``samples`` points of a tau window of
    length ``tau_length`` starting at tau=0.  With ``mp`` the target is the
    Milne-Pinney equation reached by a further x = 1/y^2.
    """
    tau_end = tau_length
    if result.reparam.tau_span[1] < tau_end:
        raise ValueError(f"transform span reaches only tau={result.reparam.tau_span[1]:.6g}")
    t_end = result.reparam.inverse(tau_end)
    src = solve(result.source, 0.0, state0, t_end, cfg)
    if not src.completed:
        raise odeint.IntegrationError(f"source integration stopped: {src.reason.value}")
    _, bar0 = result.forward(0.0, state0)
    target = result.target
    if mp:
        target = ks2_to_mp(target)
        bar0 = ks2_state_to_mp(bar0)
    tgt = solve(target, 0.0, bar0, tau_end, cfg)
    if not tgt.completed:
        raise odeint.IntegrationError(f"target integration stopped: {tgt.reason.value}")
    worst = 0.0
    for t in np.linspace(0.0, t_end, samples):
        tau, mapped = result.forward(t, src.at(t))
        if mp:
            mapped = ks2_state_to_mp(mapped)
        tau = min(max(tau, 0.0), tau_end)
        worst = max(worst, float(np.max(np.abs(np.asarray(mapped) - tgt.at(tau)))))
    if not math.isfinite(worst):
        raise odeint.IntegrationError("non-finite deviation")
    return worst


__all__ = [
    "ConditionFailed", "Unreducible", "TransformResult", "ConditionReport", "FlowError",
    "reduce_a1", "check_ks2_conditions", "to_ks2", "ks2_to_mp", "ks2_state_to_mp",
    "mp_state_to_ks2", "to_second_riccati", "second_riccati_coeffs", "ks2_frequency",
    "transport_deviation",
]
