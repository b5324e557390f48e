"""Adaptive Dormand-Prince 5(4) integrator with dense output.

One integrator serves every numerical need of the package: trajectories,
cumulative quadratures (as an extra state component) and the auxiliary
ODEs that define some coefficient functions.
"""
from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class Termination(enum.Enum):
    COMPLETED = "completed"
    SINGULARITY = "singularity_reached"
    BLOWUP = "blow_up"


class IntegrationError(RuntimeError):
    pass


class StepFailure(IntegrationError):
    pass


class MaxSteps(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 200_000
    x_min: float = 1e-8
    blowup: float = 1e8
    h0: float | None = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")

    def scaled(self, factor: float) -> "IntegratorConfig":
        return IntegratorConfig(self.rtol * factor, self.atol * factor, self.max_steps, self.x_min, self.blowup, self.h0)


DEFAULT = IntegratorConfig()

# Dormand & Prince (1980) tableau, FSAL.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Shampine's continuous extension (as in Hairer's DOPRI5).
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])


class Trajectory:
    """Accepted steps of an integration plus a per-step dense interpolant."""

    def __init__(self, times, states, dense, reason: Termination, rhs=None, names: Sequence[str] | None = None):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self._dense = dense  # per step: (r1..r5) arrays
        self.reason = reason
        self.rhs = rhs
        self.names = tuple(names) if names else tuple(f"y{i}" for i in range(self.states.shape[1]))
        self._tlist = self.times.tolist()

    @property
    def t0(self) -> float:
        return self._tlist[0]

    @property
    def t1(self) -> float:
        return self._tlist[-1]

    @property
    def completed(self) -> bool:
        return self.reason is Termination.COMPLETED

    def __len__(self) -> int:
        return len(self._tlist)

    def at(self, t: float) -> np.ndarray:
        ts = self._tlist
        if t < ts[0] - 1e-12 or t > ts[-1] + 1e-12:
            raise ValueError(f"t={t} outside trajectory range [{ts[0]}, {ts[-1]}]")
        i = bisect.bisect_right(ts, t) - 1
        i = min(max(i, 0), len(ts) - 2)
        if len(ts) == 1:
            return self.states[0].copy()
        h = ts[i + 1] - ts[i]
        th = (t - ts[i]) / h
        r1, r2, r3, r4, r5 = self._dense[i]
        th1 = 1.0 - th
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))

    def __call__(self, t: float) -> np.ndarray:
        return self.at(t)

    def component(self, i: int) -> Callable[[float], float]:
        return lambda t: float(self.at(t)[i])

    def deriv(self, t: float) -> np.ndarray:
        if self.rhs is None:
            raise ValueError("trajectory was built without its right-hand side")
        return np.asarray(self.rhs(t, self.at(t)), dtype=float)

    def sample(self, ts) -> np.ndarray:
        return np.array([self.at(t) for t in ts])

    def to_csv(self, path, names: Sequence[str] | None = None, resample: int | None = None) -> None:
        names = tuple(names) if names else self.names
        if resample:
            ts = np.linspace(self.t0, self.t1, resample)
            rows = zip(ts, self.sample(ts))
        else:
            rows = zip(self.times, self.states)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *names])
            for t, y in rows:
                w.writerow([repr(float(t)), *(repr(float(c)) for c in y)])


def _initial_step(rhs, t0, y0, f0, direction, cfg) -> float:
    scale = cfg.atol + np.abs(y0) * cfg.rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(rhs(t0 + direction * h0, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def integrate(
    rhs: Callable,
    t0: float,
    state0,
    t1: float,
    cfg: IntegratorConfig = DEFAULT,
    guard: Sequence[int] = (),
    names: Sequence[str] | None = None,
) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1 > t0``.

    Coordinates listed in ``guard`` must stay away from zero: when a step
    would bring one of them below ``cfg.x_min`` in absolute value (or across
    zero), the trajectory is cut at the point where it reaches ``x_min`` and
    returned with reason SINGULARITY.  States larger than ``cfg.blowup``
    end the run with reason BLOWUP.
    """
    if not t1 > t0:
        raise ValueError("t1 must be greater than t0")
    y = np.array(state0, dtype=float)
    t = float(t0)
    f = np.asarray(rhs(t, y), dtype=float)
    span = t1 - t0
    h = cfg.h0 or _initial_step(rhs, t, y, f, 1.0, cfg)
    h = min(h, span)
    hmin = 16 * np.finfo(float).eps * max(abs(t0), abs(t1), 1.0)
    times, states, dense = [t], [y.copy()], []
    reason = Termination.COMPLETED
    beta, expo = 0.04, 0.2 - 0.04 * 0.75
    err_old = 1e-4
    rejected = False
    steps = 0
    guard = tuple(guard)

    while t < t1:
        if steps >= cfg.max_steps:
            raise MaxSteps(f"exceeded {cfg.max_steps} steps at t={t}")
        steps += 1
        if t + h > t1 or t1 - (t + h) < hmin:
            h = t1 - t
        k = [f]
        ok = True
        try:
            for s in range(1, 7):
                ys = y + h * sum(a * kk for a, kk in zip(_A[s], k) if a)
                k.append(np.asarray(rhs(t + _C[s] * h, ys), dtype=float))
        except (ArithmeticError, ValueError):
            ok = False
        if ok:
            ynew = y + h * sum(b * kk for b, kk in zip(_B, k) if b)
            ok = bool(np.all(np.isfinite(ynew))) and all(np.all(np.isfinite(kk)) for kk in k)
        if not ok:
            if guard and min(abs(y[i]) for i in guard) < 1e3 * cfg.x_min and h < 1e-6 * max(span, 1.0):
                reason = Termination.SINGULARITY
                break
            h *= 0.25
            rejected = True
            if h < hmin:
                raise StepFailure(f"step size underflow at t={t}")
            continue
        scale = cfg.atol + np.maximum(np.abs(y), np.abs(ynew)) * cfg.rtol
        errv = h * sum(e * kk for e, kk in zip(_E, k) if e) / scale
        err = math.sqrt(float(np.mean(errv * errv)))
        if err > 1.0:
            h *= max(0.2, 0.9 * err**-expo)
            rejected = True
            if h < hmin:
                raise StepFailure(f"step size underflow at t={t}")
            continue

        fnew = k[6]
        ydiff = ynew - y
        bspl = h * f - ydiff
        r5 = h * sum(d * kk for d, kk in zip(_D, k) if d)
        step_dense = (y.copy(), ydiff, bspl, ydiff - h * fnew - bspl, r5)

        if guard:
            hit = _guard_crossing(y, ynew, step_dense, guard, cfg.x_min)
            if hit is not None:
                th, ycut = hit
                if th > 0:
                    tcut = t + th * h
                    times.append(tcut)
                    states.append(ycut)
                    dense.append(_rescale_dense(step_dense, th))
                reason = Termination.SINGULARITY
                break

        t = t + h if t1 - (t + h) > hmin else t1
        y, f = ynew, fnew
        times.append(t)
        states.append(y.copy())
        dense.append(step_dense)
        if np.max(np.abs(y)) > cfg.blowup:
            reason = Termination.BLOWUP
            break

        fac = 0.9 * err**-expo * err_old**beta if err > 0 else 10.0
        fac = min(10.0, max(0.2, fac))
        if rejected:
            fac = min(fac, 1.0)
        h *= fac
        err_old = max(err, 1e-4)
        rejected = False

    return Trajectory(times, states, dense, reason, rhs, names)


def _interp(step_dense, th):
    r1, r2, r3, r4, r5 = step_dense
    th1 = 1.0 - th
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))


def _guard_crossing(y, ynew, step_dense, guard, x_min):
    """Fraction of the step at which a guarded coordinate first reaches x_min."""
    bad = [i for i in guard if abs(ynew[i]) < x_min or ynew[i] * y[i] <= 0]
    if not bad:
        # an interior dip below x_min is also a crossing of the excluded set
        for th in np.linspace(0.0, 1.0, 9)[1:-1]:
            ym = _interp(step_dense, th)
            if any(abs(ym[i]) < x_min or ym[i] * y[i] <= 0 for i in guard):
                bad = list(guard)
                break
        if not bad:
            return None

    def below(th):
        ym = _interp(step_dense, th)
        return any(abs(ym[i]) < x_min or ym[i] * y[i] <= 0 for i in guard)

    lo, hi = 0.0, 1.0
    if not below(hi):
        # crossing happened at an interior sample; find the earliest
        for th in np.linspace(0.0, 1.0, 9)[1:]:
            if below(th):
                hi = th
                break
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if below(mid):
            hi = mid
        else:
            lo = mid
    return lo, _interp(step_dense, lo)


def _rescale_dense(step_dense, th):
    """Dense coefficients for the truncated sub-step [0, th] of a step."""
    # the interpolant is a quartic, so five samples determine it exactly
    ths = np.linspace(0.0, th, 5)
    pts = np.array([_interp(step_dense, s) for s in ths])
    u = ths / th
    V = np.vander(u, 5, increasing=True)
    coeffs = np.linalg.solve(V, pts)
    return _Poly4(coeffs)


class _Poly4(tuple):
    """Quartic given in monomial form, stored as the nested (r1..r5) tuple."""

    def __new__(cls, coeffs):
        c0, c1, c2, c3, c4 = coeffs
        # p = r1 + th*(r2 + (1-th)*(r3 + th*(r4 + (1-th)*r5))) expands to
        # c0=r1, c1=r2+r3, c2=r4+r5-r3, c3=-(r4+2 r5), c4=r5
        r5 = c4
        r4 = -c3 - 2 * c4
        r3 = -c2 - c3 - c4
        r2 = c1 - r3
        return super().__new__(cls, (c0, r2, r3, r4, r5))
