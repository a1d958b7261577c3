import json
import math

import numpy as np
import pytest

from conftest import random_complex, scaled
from simops.cli import dumps, run_command

TWO_PI = 2 * math.pi


def _matrix_problem(eigenvalues, B):
    B = np.asarray(B, dtype=complex)
    return {
        "frame": {"eigenvalues": list(map(float, eigenvalues))},
        "matrix": {"re": B.real.tolist(), "im": B.imag.tolist()},
    }


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def twobytwo(tmp_path):
    return _write(tmp_path / "twobytwo.json", _matrix_problem([0, 1], [[0, 0.05], [0.05, 0]]))


def _run(argv):
    return run_command([str(a) for a in argv])


def test_reduce_twobytwo(twobytwo, tmp_path):
    out = tmp_path / "report.json"
    code = _run(["reduce", "--input", twobytwo, "--variant", "phi1", "--a", 0.5, "--out", out])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["residual_rel"] < 1e-10
    assert list(report)[:9] == [
        "variant",
        "a",
        "iterations",
        "residual_rel",
        "budget",
        "spectra",
        "x_star",
        "jx_star",
        "u",
    ]
    assert report["spectra"]["max_match_distance"] < 1e-8
    jx = np.array(report["jx_star"]["re"])
    assert abs(jx[0, 0] - 0.00249378) < 1e-8


def test_reduce_stdout(twobytwo, capsys):
    assert _run(["reduce", "--input", twobytwo, "--variant", "phi1", "--a", 0.5]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["variant"] == "phi1"


def test_reduce_deterministic(twobytwo, tmp_path):
    paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
    for p in paths:
        assert _run(["reduce", "--input", twobytwo, "--variant", "phi1", "--a", 0.5, "--out", p]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.parametrize(
    "variant, kind",
    [("phi", "full"), ("phi1", "full"), ("phi2", "zero_diag"), ("phi3", "lower2"), ("series", "lower")],
)
def test_verify_round_trip(tmp_path, variant, kind):
    rng = np.random.default_rng(11)
    X = scaled(random_complex(rng, (15, 15)), 0.02)
    B = {
        "full": X,
        "zero_diag": X - np.diag(np.diag(X)),
        "lower2": np.tril(X, -2),
        "lower": np.tril(X, -1) * 100,
    }[kind]
    problem = _write(tmp_path / "p.json", _matrix_problem(np.arange(-7, 8), B))
    report = tmp_path / "r.json"
    assert _run(["reduce", "--input", problem, "--variant", variant, "--a", 0.5, "--out", report]) == 0
    checked = tmp_path / "v.json"
    assert _run(["verify", "--input", report, "--out", checked]) == 0
    v = json.loads(checked.read_text())
    stored = json.loads(report.read_text())["residual_rel"]
    assert abs(v["residual_rel"] - stored) <= 1e-12
    assert v["ok"] and v["stored_spectrum_distance"] < 1e-12


def test_verify_detects_tampering(twobytwo, tmp_path):
    report = tmp_path / "r.json"
    _run(["reduce", "--input", twobytwo, "--variant", "phi1", "--a", 0.5, "--out", report])
    doc = json.loads(report.read_text())
    doc["u"]["re"][0][1] += 0.1
    tampered = _write(tmp_path / "t.json", doc)
    assert _run(["verify", "--input", tampered, "--out", tmp_path / "v.json"]) == 3


def test_budget_violation_exit_2(tmp_path, capsys):
    problem = _write(tmp_path / "p.json", _matrix_problem([0, 1], [[0, 0.2], [0.2, 0]]))
    assert _run(["reduce", "--input", problem, "--variant", "phi1", "--a", 0.5]) == 2
    err = capsys.readouterr().err
    assert "budget" in err and '"lhs"' in err


def test_structural_violation_exit_2(tmp_path):
    problem = _write(tmp_path / "p.json", _matrix_problem(range(6), np.zeros((6, 6))))
    assert _run(["reduce", "--input", problem, "--variant", "phi1", "--a", 0.7]) == 2


def test_non_convergence_exit_3(twobytwo):
    assert _run(["reduce", "--input", twobytwo, "--variant", "phi1", "--a", 0.5, "--max-iter", 1]) == 3


@pytest.mark.parametrize(
    "content",
    [
        "{not json",
        json.dumps({"frame": {"eigenvalues": [0, 1]}}),
        json.dumps(_matrix_problem([0, 1, 2], np.zeros((2, 2)))),
        json.dumps({"frame": {"eigenvalues": []}, "matrix": {"re": [], "im": []}}),
    ],
)
def test_schema_errors_exit_4(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    assert _run(["reduce", "--input", path]) == 4


def test_missing_file_exit_4(tmp_path):
    assert _run(["reduce", "--input", tmp_path / "absent.json"]) == 4
    assert _run(["verify", "--input", tmp_path / "absent.json"]) == 4


def test_unknown_subcommand():
    assert _run(["shrink"]) == 2


def test_kernels(capsys):
    assert _run(["kernels", "--a", 1]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["bounds_hold"] is True
    assert list(doc)[:6] == ["a", "phi_l1", "psi_l1", "psitilde_l1", "bounds_hold", "samples"]
    assert doc["phi_l1"] <= math.sqrt(3) and doc["psi_l1"] <= 1.35


def test_kernels_samples(tmp_path):
    out = tmp_path / "k.json"
    assert _run(["kernels", "--a", 2, "--emit-samples", "--half-width", 30, "--step", 0.05, "--out", out]) == 0
    doc = json.loads(out.read_text())
    samples = doc["samples"]
    assert len(samples) == 1201
    mid = samples[600]
    assert mid["t"] == 0 and mid["phi"] == pytest.approx(3.0 / math.pi)
    assert samples[0]["psi_im"] == pytest.approx(-samples[-1]["psi_im"])


def test_kernels_bad_grid():
    assert _run(["kernels", "--a", 1, "--emit-samples", "--step", 0.5]) == 2


def test_kernels_coarse_grid_resolution_error():
    # legal step, but too coarse for the requested 1% accuracy
    assert _run(["kernels", "--a", 2, "--emit-samples", "--half-width", 30, "--step", 0.1]) == 3


def _potential_file(tmp_path, coeffs, name="v.json"):
    doc = {
        "omega": TWO_PI,
        "coefficients": [{"n": n, "re": v.real, "im": v.imag} for n, v in coeffs.items()],
    }
    return _write(tmp_path / name, doc)


def test_potential_constant_reduction(tmp_path):
    path = _potential_file(tmp_path, {0: 0.02 + 0j, 1: 0.01 + 0j, -1: 0.01 + 0j})
    out = tmp_path / "r.json"
    assert _run(["potential", "--input", path, "--truncation", 40, "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert abs(doc["c"][0] - 0.02) < 1e-6 and abs(doc["c"][1]) < 1e-6
    assert doc["v0"] == [{"n": 0, "re": doc["c"][0], "im": doc["c"][1]}]
    assert doc["residual_rel"] < 1e-10
    assert _run(["verify", "--input", out, "--out", tmp_path / "v.json"]) == 0


def test_potential_hypercausal(tmp_path):
    path = _potential_file(tmp_path, {1: 5.0 + 0j})
    out = tmp_path / "r.json"
    assert _run(["potential", "--input", path, "--truncation", 40, "--out", out]) == 0
    doc = json.loads(out.read_text())
    assert doc["variant"] == "series" and doc["c"] == [0, 0]
    assert _run(["verify", "--input", out, "--out", tmp_path / "v.json"]) == 0


def test_potential_two_sided_series_rejected(tmp_path):
    path = _potential_file(tmp_path, {1: 1.0 + 0j, -1: 1.0 + 0j})
    assert _run(["potential", "--input", path, "--variant", "series"]) == 2


def test_potential_schema_error(tmp_path):
    path = _write(tmp_path / "v.json", {"omega": TWO_PI, "coefficients": [{"re": 1.0}]})
    assert _run(["potential", "--input", path]) == 4


def test_dumps_format():
    text = dumps({"b": 0.1, "a": [1, True, None, float("nan")], "c": "x"})
    assert text == '{"b": 0.10000000000000001, "a": [1, true, null, null], "c": "x"}\n'
    assert float(dumps(1 / 3).strip()) == 1 / 3
