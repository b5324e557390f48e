"""``quasilie`` command-line front end.

Every command reads an optional JSON job (``--job``), writes a JSON report
(and CSV trajectories where relevant) into ``--out`` and prints the report
on stdout.  Exit codes: 0 success, 1 a precondition or check failed, 2 the
job could not be parsed, 3 a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import acceptance, odeint, superpose, symvf
from .invariants import drift, easy_invariant, general_invariant, solve_alpha_eqr
from .models import (DomainViolation, LinearLieSpec, MPSpec, RiccatiSpec, SchemaError, gambier_b_coeffs,
                     model_from_json, model_to_json, solve)
from .scheme import (FlowElement, FlowError, SPACE_NAMES, check_scheme, numeric_coords,
                     pushforward_coeffs, pushforward_field_numeric, space)
from .tfun import NonMonotone, ParseError, TimeFn, as_timefn
from .transforms import (ConditionFailed, Unreducible, check_ks2_conditions, ks2_to_mp, reduce_a1, to_ks2,
                         to_second_riccati, transport_deviation)

SCHEMA = 1

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

_CHECK_ERRORS = (ConditionFailed, Unreducible, FlowError, NonMonotone)
_NUMERIC_ERRORS = (odeint.IntegrationError, DomainViolation, superpose.NegativeRadicand,
                   superpose.DegenerateDenominator, superpose.WronskianDrift,
                   superpose.DegenerateSolutions, superpose.DependentSolutions,
                   ZeroDivisionError, OverflowError, FloatingPointError)
_INPUT_ERRORS = (ParseError, SchemaError, json.JSONDecodeError, KeyError, TypeError, ValueError, OSError)


class JobError(SchemaError):
    pass


class CheckFailed(Exception):
    """A command ran but its verdict is negative; the report is still written."""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, CheckFailed) or isinstance(exc, _CHECK_ERRORS):
        return EXIT_CHECK
    if isinstance(exc, _NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(exc, _INPUT_ERRORS):
        return EXIT_INPUT
    return EXIT_NUMERIC


# -- serialisation ------------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else str(obj)
    if isinstance(obj, (float, np.floating, np.integer)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return str(obj)


def dumps(report: dict) -> str:
    """Canonical JSON: sorted keys, shortest round-trip floats, non-finite as null."""
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(c)) for c in row])


# -- job access -----------------------------------------------------------------------


class Job:
    def __init__(self, data: dict, out: str, seed: int, tol_scale: float):
        if not isinstance(data, dict):
            raise JobError("job must be a JSON object")
        self.data = data
        self.out = out
        self.seed = seed
        self.cfg = odeint.DEFAULT.scaled(tol_scale)
        self.fine = superpose.FINE.scaled(tol_scale)

    def get(self, key, default=None):
        return self.data.get(key, default)

    def need(self, key):
        if key not in self.data:
            raise JobError(f"job is missing {key!r}")
        return self.data[key]

    def number(self, key, default=None) -> float:
        v = self.data.get(key, default)
        if v is None:
            raise JobError(f"job is missing {key!r}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise JobError(f"{key!r} must be a number")
        return float(v)

    def vector(self, key, length=None, default=None) -> tuple:
        v = self.data.get(key, default)
        if v is None:
            raise JobError(f"job is missing {key!r}")
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            v = [v]
        if not isinstance(v, list) or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
            raise JobError(f"{key!r} must be a list of numbers")
        if length is not None and len(v) != length:
            raise JobError(f"{key!r} must have {length} entries")
        return tuple(float(c) for c in v)

    def span(self, default=(0.0, 1.0)) -> tuple:
        lo, hi = self.vector("span", 2, list(default))
        if not hi > lo:
            raise JobError("span must be increasing")
        return lo, hi

    def model(self, family=None):
        d = self.need("model")
        if isinstance(d, dict) and family and "family" not in d:
            d = {"family": family, **d}
        m = model_from_json(d)
        if family and model_to_json(m)["family"] != family:
            raise JobError(f"this command needs a {family!r} model")
        return m

    def timefn(self, key, default=None) -> TimeFn | None:
        v = self.data.get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (str, int, float)):
            raise JobError(f"{key!r} must be an expression string or a number")
        return as_timefn(v)

    def path(self, name) -> str:
        return os.path.join(self.out, name)


def _times(job: Job):
    t = job.get("t", 0.0)
    ts = t if isinstance(t, list) else [t]
    if not ts or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in ts):
        raise JobError("'t' must be a number or a list of numbers")
    return [float(c) for c in ts]


def _samples(job: Job, default=101) -> int:
    n = job.get("samples", default)
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise JobError("'samples' must be an integer >= 2")
    return n


def _require_completed(traj, what="integration"):
    if not traj.completed:
        raise odeint.IntegrationError(f"{what} stopped early ({traj.reason.value}) at t={traj.t1:.6g}")
    return traj


# -- commands -------------------------------------------------------------------------


def _format_combo(coords, names) -> str:
    parts = []
    for c, name in sorted(zip(coords, names), key=lambda p: -int(p[1][1:])):
        if c == 0:
            continue
        mag = abs(c)
        term = name if mag == 1 else f"{mag}{name}"
        parts.append(("-" if c < 0 else "+") + term)
    if not parts:
        return "0"
    s = "".join(parts)
    return s[1:] if s.startswith("+") else s


def cmd_bracket_table(job: Job) -> dict:
    names = [f"Y{i}" for i in range(1, 18)]
    gens = symvf.y_basis(17)
    tables, diff = {"brackets_vg": {}, "brackets_ext": {}}, []
    for row, col, golden in acceptance.golden_entries():
        br = symvf.lie_bracket(symvf.basis(row), symvf.basis(col))
        coords = symvf.coords_in_span(br, gens)
        text = _format_combo(coords, names) if coords is not None else str(br)
        key = "brackets_vg" if int(col[1:]) <= 11 else "brackets_ext"
        tables[key].setdefault(row, {})[col] = text
        if br != acceptance.parse_combo(golden):
            diff.append({"bracket": f"[{row},{col}]", "computed": text, "golden": golden})
    report = {**tables, "golden_diff": diff, "pass": not diff}
    if diff:
        raise CheckFailed(report)
    return report


def cmd_check_scheme(job: Job) -> dict:
    w, v = job.get("W", "W_G"), job.get("V", "V_G")
    for name in (w, v):
        if name not in SPACE_NAMES:
            raise JobError(f"unknown space {name!r}; expected one of {list(SPACE_NAMES)}")
    report = check_scheme(space(w), space(v)).to_json()
    if not report["pass"]:
        raise CheckFailed(report)
    return report


def cmd_gambier_coeffs(job: Job) -> dict:
    spec = job.model("gambier")
    rows = [{"t": t, "b": list(gambier_b_coeffs(spec, t))} for t in _times(job)]
    return {"model": model_to_json(spec), "coefficients": rows}


def _flow(job: Job) -> FlowElement:
    f = job.need("flow")
    if not isinstance(f, dict):
        raise JobError("'flow' must be an object with alpha, gamma, delta")
    g = FlowElement(f.get("alpha", 1), f.get("gamma", 0), f.get("delta", 1))
    return g.validate(job.span()) if job.get("validate", True) else g


def cmd_pushforward(job: Job) -> dict:
    spec = job.model("gambier")
    g = _flow(job)
    rows, worst = [], 0.0
    gens = symvf.y_basis(11)
    for t in _times(job):
        b = pushforward_coeffs(spec, g, t)
        coords = numeric_coords(pushforward_field_numeric(spec, g, t), gens)
        dev = None if coords is None else max(abs(p - q) for p, q in zip(b, coords))
        worst = math.inf if dev is None else max(worst, dev)
        rows.append({"t": t, "bbar": list(b), "field_coords": None if coords is None else list(coords),
                     "deviation": dev})
    return {"model": model_to_json(spec), "flow": g.to_json(), "pushforward": rows, "max_deviation": worst}


def _transform_report(job: Job, result, mp=False) -> dict:
    report = result.to_json(_samples(job, 11))
    lo, hi = result.reparam.tau_span
    ts = np.linspace(lo, hi, _samples(job, 11))
    target = result.target
    fields = {k: getattr(target, k) for k in vars(target) if isinstance(getattr(target, k), TimeFn)}
    report["target_samples"] = {"tau": list(ts), **{k: [f(t) for t in ts] for k, f in sorted(fields.items())}}
    if mp:
        report["mp_target"] = model_to_json(ks2_to_mp(target))
    state0 = job.get("state0")
    if state0 is not None:
        tau_len = job.number("tau_length", min(1.0, hi))
        dev = transport_deviation(result, job.vector("state0", 2), tau_len, cfg=job.cfg, mp=mp)
        report["transport"] = {"state0": list(job.vector("state0", 2)), "tau_length": tau_len,
                               "deviation": dev}
    return report


def cmd_reduce(job: Job) -> dict:
    return _transform_report(job, reduce_a1(job.model("gambier"), job.span()))


def cmd_to_ks2(job: Job) -> dict:
    result = to_ks2(job.model("gambier"), job.timefn("alpha"), job.span())
    return _transform_report(job, result, mp=bool(job.get("mp", False)))


def cmd_to_riccati2(job: Job) -> dict:
    return _transform_report(job, to_second_riccati(job.model("gambier"), job.timefn("alpha"), job.span()))


def cmd_integrate(job: Job) -> dict:
    model = job.model()
    t0, t1 = job.span()
    traj = solve(model, t0, job.vector("state0"), t1, job.cfg)
    name = job.get("csv", "trajectory.csv")
    resample = job.get("samples")
    traj.to_csv(job.path(name), resample=resample)
    report = {"model": model_to_json(model), "span": [t0, t1], "completed": traj.completed,
              "termination": traj.reason.value, "t_end": traj.t1, "state_end": list(traj.states[-1]),
              "steps": len(traj.times) - 1, "trajectory_ref": name}
    if not traj.completed:
        report["error"] = f"integration stopped early ({traj.reason.value})"
        raise _NumericReport(report)
    return report


class _NumericReport(Exception):
    """Numerical failure that still produced a report worth writing."""


def cmd_invariant(job: Job) -> dict:
    spec = job.model("gambier")
    span = job.span()
    lam = job.number("lambda")
    kind = job.get("kind", "easy")
    if kind == "easy":
        F = easy_invariant(spec, lam, span)
    elif kind == "general":
        alpha = job.timefn("alpha") or solve_alpha_eqr(spec, lam, job.number("w0", 0.0), span)
        F = general_invariant(spec, lam, alpha, span)
    else:
        raise JobError("'kind' must be 'easy' or 'general'")
    traj = _require_completed(solve(spec, span[0], job.vector("state0", 2), span[1], job.cfg))
    name = job.get("csv", "invariant.csv")
    write_csv(job.path(name), ["t", "x", "v", "F"],
              ([t, s[0], s[1], F.on_state(t, s)] for t, s in zip(traj.times, traj.states)))
    conditions = check_ks2_conditions(spec, span).residuals
    if kind == "easy":
        conditions["a2=-lambda*a0^2/a0(0)^2"] = max(
            abs(spec.a2(t) + lam * spec.a0(t) ** 2 / spec.a00 ** 2) for t in np.linspace(*span, 1001))
    return {"lambda": lam, "kind": kind, "conditions": conditions, "drift": drift(F, traj),
            "trajectory_ref": name}


def _residual_report(job: Job, ts, columns: dict, residual: float, extra=None) -> dict:
    name = job.get("csv", "superpose.csv")
    write_csv(job.path(name), ["t", *columns], zip(ts, *columns.values()))
    out = {"residual": residual, "trajectory_ref": name}
    out.update(extra or {})
    return out


def _superpose_riccati(job: Job) -> dict:
    model = job.model("riccati")
    t0, t1 = job.span()
    u0 = job.vector("solutions", 3)
    x0 = job.number("x0")
    us = [_require_completed(solve(model, t0, (u,), t1, job.fine)) for u in (*u0, x0)]
    k = superpose.riccati_k(x0, *u0)
    ts = np.linspace(t0, t1, _samples(job))
    sr = [superpose.riccati_sr(*(u.at(t)[0] for u in us[:3]), k) for t in ts]
    direct = [us[3].at(t)[0] for t in ts]
    dev = max(abs(a - b) for a, b in zip(sr, direct))
    return _residual_report(job, ts, {"x_rule": sr, "x_direct": direct}, dev, {"k": k})


def _mp_a00(model: MPSpec) -> float:
    return 2.0 * math.sqrt(float(model.kcoef))


def _superpose_mp_oscillators(job: Job) -> dict:
    model = job.model("mp")
    lo, hi = job.span()
    if lo != 0:
        raise JobError("span must start at 0")
    z1, z2 = superpose.oscillator_pair(model.omega, hi, job.vector("z1", 2, [1.0, 0.0]),
                                       job.vector("z2", 2, [0.0, 1.0]), job.fine)
    y = superpose.mp_from_oscillators(z1, z2, job.number("k1"), job.number("k2"), int(job.number("sign", 1)),
                                      _mp_a00(model))
    ts = np.linspace(lo, hi, _samples(job))
    res = max(abs(superpose.mp_residual(y, model.omega, float(model.kcoef), t)) for t in ts)
    return _residual_report(job, ts, {"y": [y(t) for t in ts]}, res, {"C": y.C, "wronskian": y.W})


def _superpose_mp_riccati(job: Job) -> dict:
    model = job.model("mp")
    lo, hi = job.span()
    ric = RiccatiSpec(-model.omega, 0, -1)
    xs = [_require_completed(solve(ric, lo, (c,), hi, job.fine)) for c in job.vector("x0", 3)]
    y = superpose.mp_from_riccati(*xs, job.number("k1"), job.number("k2"), _mp_a00(model), model.omega)
    ts = np.linspace(lo, hi, _samples(job))
    res = max(abs(superpose.mp_residual(y, model.omega, float(model.kcoef), t)) for t in ts)
    return _residual_report(job, ts, {"y": [y(t) for t in ts]}, res)


def _superpose_mixed(job: Job) -> dict:
    model = job.model("riccati2")
    lo, hi = job.span()
    if lo != 0:
        raise JobError("span must start at 0")
    basis = superpose.linear_basis(LinearLieSpec.from_second_riccati(model), hi, job.cfg)
    for b in basis:
        _require_completed(b)
    sol = superpose.mixed_sr(basis, job.vector("lambdas", 3))
    ts = np.linspace(lo, hi, _samples(job))
    res = max(abs(superpose.sr_residual(model, sol, t)) for t in ts)
    return _residual_report(job, ts, {"x": [sol(t) for t in ts], "v": [sol.v(t) for t in ts]}, res)


def _superpose_gambier(job: Job) -> dict:
    spec = job.model("gambier")
    span = job.span()
    if span[0] != 0:
        raise JobError("span must start at 0")
    tr = to_ks2(spec, job.timefn("alpha"), span)
    z1, z2 = superpose.oscillator_pair(tr.target.omega, tr.reparam.tau_span[1], cfg=job.fine)
    sol = superpose.gambier_general_solution(spec, tr, z1, z2, job.number("k1"), job.number("k2"),
                                             int(job.number("sign", 1)))
    ts = np.linspace(span[0], span[1], _samples(job))
    res = max(abs(superpose.gambier_residual(spec, sol, t)) for t in ts)
    dev = superpose.direct_deviation(spec, sol, span[1], cfg=job.cfg)
    return _residual_report(job, ts, {"x": [sol(t) for t in ts]}, res, {"direct_deviation": dev})


_SUPERPOSE = {
    "riccati": _superpose_riccati,
    "mp-oscillators": _superpose_mp_oscillators,
    "mp-riccati": _superpose_mp_riccati,
    "mixed": _superpose_mixed,
    "gambier": _superpose_gambier,
}


def cmd_superpose(job: Job) -> dict:
    kind = job.need("kind")
    if kind not in _SUPERPOSE:
        raise JobError(f"unknown superposition kind {kind!r}; expected one of {sorted(_SUPERPOSE)}")
    return {"kind": kind, **_SUPERPOSE[kind](job)}


def cmd_exact_solve(job: Job) -> dict:
    spec = job.model("gambier")
    span = job.span()
    sol = superpose.exact_gambier_n1(spec, span, job.number("c1", 0.0), job.number("c2", 1.0))
    ts = np.linspace(span[0], span[1], _samples(job))
    xs = [sol(t) for t in ts]
    name = job.get("csv", "exact.csv")
    write_csv(job.path(name), ["t", "x"], zip(ts, xs))
    report = {"model": model_to_json(spec), "span": list(span), "c1": job.number("c1", 0.0),
              "c2": job.number("c2", 1.0), "initial_state": list(sol.initial_state(0.0)),
              "trajectory_ref": name}
    t_check = job.get("check_until")
    if t_check is not None:
        report["direct_deviation"] = superpose.direct_deviation(spec, sol, job.number("check_until"), cfg=job.cfg)
    return report


def cmd_verify(job: Job) -> dict:
    report, timings = acceptance.run_all(job.seed)
    for c in report["criteria"]:
        print(f"criterion {c['criterion']}: {'PASS' if c['pass'] else 'FAIL'}", file=sys.stderr)
    print("timings (s): " + json.dumps({k: round(v, 3) for k, v in timings.items()}), file=sys.stderr)
    if not report["pass"]:
        raise CheckFailed(report)
    return report


COMMANDS = {
    "bracket-table": cmd_bracket_table,
    "check-scheme": cmd_check_scheme,
    "gambier-coeffs": cmd_gambier_coeffs,
    "pushforward": cmd_pushforward,
    "reduce": cmd_reduce,
    "to-ks2": cmd_to_ks2,
    "to-riccati2": cmd_to_riccati2,
    "integrate": cmd_integrate,
    "invariant": cmd_invariant,
    "superpose": cmd_superpose,
    "exact-solve": cmd_exact_solve,
    "verify": cmd_verify,
}


# -- driver ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasilie", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--job", help="JSON job file (optional for bracket-table and verify)")
    p.add_argument("--out", default=".", help="directory for the report and CSV files")
    p.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED, help="seed for randomized checks")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiplies integrator rtol and atol")
    return p


def _error(code: int, exc: BaseException):
    msg = str(exc) or type(exc).__name__
    print(f"quasilie: error: {msg}", file=sys.stderr)
    print(json.dumps({"schema": SCHEMA, "error": type(exc).__name__, "message": msg, "exit": code},
                     sort_keys=True), file=sys.stderr)


def run(command: str, job_data: dict | None = None, out: str = ".", seed: int = acceptance.DEFAULT_SEED,
        tol_scale: float = 1.0) -> tuple[int, dict | None]:
    """Execute one command; returns ``(exit_code, report)`` and writes ``<out>/<command>.json``."""
    if seed < 0 or seed >= 2 ** 64:
        raise JobError("seed must be an unsigned 64-bit integer")
    if not (tol_scale > 0 and math.isfinite(tol_scale)):
        raise JobError("--tol-scale must be a positive number")
    job = Job(job_data if job_data is not None else {}, out, seed, tol_scale)
    os.makedirs(out, exist_ok=True)
    code, body = EXIT_OK, None
    try:
        body = COMMANDS[command](job)
    except CheckFailed as e:
        code, body = EXIT_CHECK, e.args[0]
    except _NumericReport as e:
        code, body = EXIT_NUMERIC, e.args[0]
    report = {"schema": SCHEMA, "command": command, **body}
    with open(os.path.join(out, f"{command}.json"), "w", newline="\n") as fh:
        fh.write(dumps(report))
    return code, report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = None
        if args.job:
            with open(args.job) as fh:
                data = json.load(fh)
        code, report = run(args.command, data, args.out, args.seed, args.tol_scale)
    except Exception as e:  # mapped to the documented exit codes
        code = exit_code_for(e)
        _error(code, e)
        return code
    sys.stdout.write(dumps(report))
    if code == EXIT_CHECK:
        print("quasilie: check failed", file=sys.stderr)
    elif code == EXIT_NUMERIC:
        print(f"quasilie: error: {report.get('error', 'numerical failure')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
