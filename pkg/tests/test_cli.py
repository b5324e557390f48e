import json

import pytest

from quasilie.cli import dumps, main

GAMBIER_KS2 = {"a0": "-2*exp(sin(t))", "a1": "cos(t)", "a2": "0.5 + t", "sigma": 0, "n": -2}


def run(tmp_path, command, job=None, *extra):
    argv = [command, "--out", str(tmp_path)]
    if job is not None:
        p = tmp_path / "job.json"
        p.write_text(job if isinstance(job, str) else json.dumps(job))
        argv += ["--job", str(p)]
    code = main(argv + list(extra))
    report = tmp_path / f"{command}.json"
    return code, (json.loads(report.read_text()) if report.exists() else None)


def test_check_scheme_passes(tmp_path):
    code, rep = run(tmp_path, "check-scheme", {"W": "W_G", "V": "V_G"})
    assert code == 0
    assert rep["schema"] == 1 and rep["pass"]
    assert [c["pass"] for c in rep["conditions"]] == [True, True, True]


def test_check_scheme_failure_exit(tmp_path):
    code, rep = run(tmp_path, "check-scheme", {"W": "V_G", "V": "V_G"})
    assert code == 1
    witnesses = [w["bracket"] for c in rep["conditions"] for w in c["witnesses"] if "bracket" in w]
    assert "[Y3,Y6]" in witnesses


def test_reduce_n2_exit_and_message(tmp_path, capsys):
    code, _ = run(tmp_path, "reduce", {"model": {"a0": "1", "a1": "1", "a2": "0", "sigma": 1, "n": 2}})
    assert code == 1
    err = capsys.readouterr().err
    assert "does not exist for n=2" in err
    machine = json.loads(err.strip().splitlines()[-1])
    assert machine["error"] == "Unreducible" and machine["exit"] == 1


def test_bracket_table_matches_golden(tmp_path):
    code, rep = run(tmp_path, "bracket-table")
    assert code == 0 and rep["golden_diff"] == []
    assert rep["brackets_vg"]["Y8"]["Y1"] == "Y11-Y4"
    assert rep["brackets_vg"]["Y4"]["Y8"] == "-Y8"
    assert sum(len(r) for r in rep["brackets_vg"].values()) == 33
    assert sum(len(r) for r in rep["brackets_ext"].values()) == 18


@pytest.mark.parametrize("job,code", [
    ("{not json", 2),
    ({"model": {"a0": "2 +", "a1": "0", "a2": "0", "n": -2}}, 2),
    ({"model": {"a0": "1", "a1": "0", "a2": "0"}}, 2),
    ({"model": {"a0": "1", "a1": "0", "a2": "0", "n": -2}, "span": [1, 0]}, 2),
])
def test_input_errors_exit_2(tmp_path, job, code):
    assert run(tmp_path, "reduce", job)[0] == code


def test_precondition_exit_1(tmp_path):
    job = {"model": {"a0": "2 + t", "a1": "1", "a2": "0", "sigma": 0, "n": -2}}
    assert run(tmp_path, "to-ks2", job)[0] == 1


def test_numerical_failure_exit_3(tmp_path):
    job = {"model": {"family": "riccati", "b1": "1", "b2": "0", "b3": "1"}, "span": [0, 2], "state0": [0]}
    code, rep = run(tmp_path, "integrate", job)
    assert code == 3 and rep["termination"] == "blow_up"


def test_integrate_writes_csv(tmp_path):
    job = {"model": {"family": "mp", "omega": "1", "kcoef": 0.25}, "span": [0, 1], "state0": [1, 0],
           "samples": 11}
    code, rep = run(tmp_path, "integrate", job)
    assert code == 0 and rep["completed"]
    lines = (tmp_path / rep["trajectory_ref"]).read_text().splitlines()
    assert lines[0] == "t,y,dy" and len(lines) == 12


def test_to_ks2_with_transport(tmp_path):
    job = {"model": GAMBIER_KS2, "alpha": "1 + t^2/4", "span": [0, 2], "state0": [0.3, 0], "mp": True}
    code, rep = run(tmp_path, "to-ks2", job)
    assert code == 0
    assert rep["transport"]["deviation"] <= 1e-6
    assert rep["mp_target"]["family"] == "mp"


def test_to_riccati2(tmp_path):
    job = {"model": {"a0": "-exp(t/2)", "a1": "cos(t)", "a2": "t", "sigma": 0, "n": 1}, "span": [0, 2],
           "state0": [0.4, 0.1]}
    code, rep = run(tmp_path, "to-riccati2", job)
    assert code == 0 and rep["transport"]["deviation"] <= 1e-6


def test_pushforward_and_coeffs(tmp_path):
    job = {"model": {"a0": "1 + t/3", "a1": "sin(t)", "a2": "t^2", "sigma": 0.5, "n": 3},
           "flow": {"alpha": "exp(t)", "gamma": "t", "delta": "1 + t^2"}, "t": [0, 0.5, 1]}
    code, rep = run(tmp_path, "pushforward", job)
    assert code == 0 and rep["max_deviation"] <= 1e-9
    code, rep = run(tmp_path, "gambier-coeffs", job)
    assert code == 0 and len(rep["coefficients"]) == 3


def test_invariant_report(tmp_path):
    job = {"model": {"a0": "-2*exp(sin(t))", "a1": "cos(t)", "a2": "-0.3*exp(2*sin(t))", "sigma": 0, "n": -2},
           "lambda": 0.3, "span": [0, 1], "state0": [0.3, 0]}
    code, rep = run(tmp_path, "invariant", job)
    assert code == 0
    assert set(rep) >= {"lambda", "conditions", "drift", "trajectory_ref"}
    assert rep["drift"] <= 1e-6
    assert (tmp_path / rep["trajectory_ref"]).exists()


@pytest.mark.parametrize("job", [
    {"kind": "riccati", "model": {"family": "riccati", "b1": "1", "b2": "0", "b3": "1"}, "span": [0, 0.6],
     "solutions": [0, 0.3, -0.5], "x0": 0.8},
    {"kind": "mp-oscillators", "model": {"omega": "1 + t/2", "kcoef": 0.5625}, "span": [0, 1], "k1": 1, "k2": 0.5},
    {"kind": "mp-riccati", "model": {"omega": "1 + t/2", "kcoef": 0.5625}, "span": [0, 0.5], "x0": [0.1, 0.7, 1.3],
     "k1": 0.4, "k2": 2.1},
    {"kind": "mixed", "model": {"f": "0", "g": "0", "h": "0"}, "span": [0, 1], "lambdas": [1, 0.3, 1]},
    {"kind": "gambier", "model": GAMBIER_KS2, "alpha": "1 + t^2/4", "span": [0, 1], "k1": 3, "k2": 2, "sign": 1},
], ids=lambda j: j["kind"])
def test_superpose_kinds(tmp_path, job):
    code, rep = run(tmp_path, "superpose", job)
    assert code == 0
    assert rep["residual"] <= 1e-6
    assert (tmp_path / rep["trajectory_ref"]).read_text().startswith("t,")


def test_exact_solve(tmp_path):
    job = {"model": {"a0": "-1", "a1": "0", "a2": "0", "sigma": 0, "n": 1}, "span": [0, 2], "c1": 0.5, "c2": 1,
           "check_until": 1.0}
    code, rep = run(tmp_path, "exact-solve", job)
    assert code == 0 and rep["direct_deviation"] <= 1e-6
    assert rep["initial_state"][0] == pytest.approx(0.5)


def test_identical_jobs_give_identical_reports(tmp_path):
    job = {"model": GAMBIER_KS2, "alpha": "1 + t^2/4", "span": [0, 2], "state0": [0.3, 0]}
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    run(a, "to-ks2", job)
    run(b, "to-ks2", job)
    assert (a / "to-ks2.json").read_bytes() == (b / "to-ks2.json").read_bytes()


def test_verify_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    assert run(a, "verify")[0] == 0
    assert run(b, "verify")[0] == 0
    assert (a / "verify.json").read_bytes() == (b / "verify.json").read_bytes()
    rep = json.loads((a / "verify.json").read_text())
    assert rep["schema"] == 1 and rep["pass"] and len(rep["criteria"]) == 9


def test_dumps_is_canonical():
    text = dumps({"b": 0.1, "a": float("nan"), "c": [1 / 3]})
    assert text.index('"a"') < text.index('"b"')
    assert "null" in text and "0.3333333333333333" in text


def test_bad_tol_scale(tmp_path):
    assert main(["bracket-table", "--out", str(tmp_path), "--tol-scale", "-1"]) == 2
