import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasilie import odeint
from quasilie.models import GambierSpec, solve
from quasilie.odeint import IntegratorConfig, Termination, integrate


def test_exponential_endpoint():
    tr = integrate(lambda t, y: (y[0],), 0.0, (1.0,), 1.0)
    assert tr.completed
    assert abs(tr.at(1.0)[0] - math.e) <= 1e-9


def test_oscillator_energy_over_ten_periods():
    tr = integrate(lambda t, y: (y[1], -y[0]), 0.0, (1.0, 0.0), 20 * math.pi)
    energy = 0.5 * (tr.states[:, 0] ** 2 + tr.states[:, 1] ** 2)
    assert np.max(np.abs(energy - 0.5)) <= 1e-7


def test_dense_output_between_steps():
    tr = integrate(lambda t, y: (y[1], -y[0]), 0.0, (0.0, 1.0), 3.0)
    for t in np.linspace(0, 3, 37):
        assert tr.at(t)[0] == pytest.approx(math.sin(t), abs=1e-9)
        assert tr.deriv(t)[0] == pytest.approx(math.cos(t), abs=1e-9)


def test_singularity_guard():
    # x'' = -x^-2 from rest at x=1 falls into x=0 in finite time
    tr = integrate(lambda t, y: (y[1], -1 / y[0] ** 2), 0.0, (1.0, 0.0), 5.0, guard=(0,))
    assert tr.reason is Termination.SINGULARITY
    assert abs(tr.states[-1][0]) >= odeint.DEFAULT.x_min / 2
    assert tr.t1 < 5.0


def test_gambier_collapse_is_guarded():
    # n=2, sigma=1: x'' = v^2/(2x) + 2xv - x^3/2 - x - 1/(2x), attracted into x=0 from rest
    spec = GambierSpec(1, 0, 0, 1, 2)
    tr = solve(spec, 0.0, (1.0, 0.0), 5.0)
    assert tr.reason is Termination.SINGULARITY
    assert abs(tr.states[-1][0]) >= odeint.DEFAULT.x_min / 2
    assert tr.t1 < 5.0


def test_blowup_detected():
    tr = integrate(lambda t, y: (1 + y[0] ** 2,), 0.0, (0.0,), 2.0)
    assert tr.reason is Termination.BLOWUP
    assert tr.t1 == pytest.approx(math.pi / 2, abs=1e-6)


def test_scaled_config():
    c = IntegratorConfig().scaled(10)
    assert (c.rtol, c.atol) == (1e-9, 1e-11)


def test_csv_format(tmp_path):
    tr = integrate(lambda t, y: (-y[0],), 0.0, (1.0,), 1.0, names=("y",))
    p = tmp_path / "tr.csv"
    tr.to_csv(p, resample=5)
    text = p.read_bytes()
    assert b"\r" not in text
    lines = text.decode().splitlines()
    assert lines[0] == "t,y" and len(lines) == 6
    assert float(lines[-1].split(",")[1]) == pytest.approx(math.exp(-1), abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.1, 3.0))
def test_linear_decay_matches_closed_form(k, t1):
    tr = integrate(lambda t, y: (k * y[0],), 0.0, (1.0,), t1)
    assert tr.at(t1)[0] == pytest.approx(math.exp(k * t1), rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 2.0), st.floats(-1, 1), st.floats(-1, 1))
def test_time_reversal_retraces(w, x0, v0):
    f = lambda t, y: (y[1], -w * w * y[0])
    fwd = integrate(f, 0.0, (x0, v0), 2.0)
    x1, v1 = fwd.at(2.0)
    back = integrate(f, 0.0, (x1, -v1), 2.0)
    assert np.allclose(back.at(2.0), (x0, -v0), atol=1e-8)
