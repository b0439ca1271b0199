import json
import math

import numpy as np
import pytest

from stabcert.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, dumps, main, strip_timestamps
from stabcert.models import PerturbationFactors, build_diagonal_model, factors_to_dict, model_to_dict


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def test_certify_disk_preset(tmp_path, capsys):
    out = tmp_path / "cert.json"
    assert main(["certify", "--model", "preset:disk", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["certificate"]["delta"] == pytest.approx(1 / math.sqrt(10), abs=1e-12)
    assert data["certificate"]["binding"] == "delta1"
    assert "timestamp" in data
    assert "binding: delta1" in capsys.readouterr().err


def test_certify_model_file(tmp_path):
    model = _write(tmp_path / "m.json", model_to_dict(build_diagonal_model("inverse", 200)))
    out = tmp_path / "cert.json"
    assert main(["certify", "--model", model, "--c", "0.8", "--out", str(out)]) == EXIT_OK
    cert = json.loads(out.read_text())["certificate"]
    assert cert["profile"]["alpha"] == 1.0
    assert cert["beta"] == 0.5 and cert["gamma"] == 0.5


def test_certify_no_resonances(tmp_path):
    model = _write(tmp_path / "m.json", {"kind": "disk_multiplication", "params": {"center": [-2, 0], "radius": 1}, "n_radial": 4, "n_angular": 8})
    out = tmp_path / "cert.json"
    assert main(["certify", "--model", model, "--out", str(out)]) == EXIT_OK
    cert = json.loads(out.read_text())["certificate"]
    assert cert["binding"] == "sqrt_c_over_M2"
    assert cert["delta"] == pytest.approx(math.sqrt(0.8 / cert["M2"]))


def test_config_errors(tmp_path, capsys):
    assert main(["certify", "--model", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["certify", "--model", str(bad)]) == EXIT_CONFIG
    assert main(["certify", "--model", "preset:nope"]) == EXIT_CONFIG
    assert main(["certify", "--model", "preset:diagonal", "--beta", "0.7", "--gamma", "0.7"]) == EXIT_CONFIG
    assert main(["certify", "--model", "preset:diagonal", "--c", "1.5"]) == EXIT_CONFIG
    unstable = _write(tmp_path / "u.json", {"kind": "custom_normal", "params": {"eigenvalues": [[0.5, 0], [-1, 0]]}})
    assert main(["certify", "--model", unstable]) == EXIT_CONFIG
    assert "right half-plane" in capsys.readouterr().err


def test_verify_needs_certificate(tmp_path, capsys):
    code = main(["verify", "--model", "preset:diagonal", "--pert", "preset:diagonal", "--cert", str(tmp_path / "none.json")])
    assert code == EXIT_CONFIG
    assert "run `stabcert certify" in capsys.readouterr().err


def test_verify_mismatched_factors(tmp_path):
    cert = tmp_path / "cert.json"
    main(["certify", "--model", "preset:diagonal", "--out", str(cert)])
    pert = _write(tmp_path / "p.json", factors_to_dict(PerturbationFactors.zero(7)))
    assert main(["verify", "--model", "preset:diagonal", "--pert", pert, "--cert", str(cert)]) == EXIT_CONFIG


def test_verify_zero_factors_passes(tmp_path):
    model = _write(tmp_path / "m.json", model_to_dict(build_diagonal_model("inverse", 60)))
    cert = tmp_path / "cert.json"
    main(["certify", "--model", model, "--out", str(cert)])
    pert = _write(tmp_path / "p.json", factors_to_dict(PerturbationFactors.zero(60)))
    out = tmp_path / "r.json"
    tables = tmp_path / "tables"
    args = ["verify", "--model", model, "--pert", pert, "--cert", str(cert), "--out", str(out), "--tables", str(tables)]
    args += ["--grid-radii", "10", "--grid-angles", "5", "--grid-nx", "5", "--grid-ny", "9", "--grid-xi", "7"]
    assert main(args) == EXIT_OK
    report = json.loads(out.read_text())["report"]
    assert report["passed"]
    assert (tables / "trajectory.csv").read_text().startswith("point,value")


def test_verify_polynomial_preset(tmp_path):
    out = tmp_path / "poly.json"
    assert main(["verify-polynomial", "--model", "preset:poly", "--pert", "preset:poly", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["sizes"]["B"] <= 0.05 and data["sizes"]["C"] <= 0.05
    for fit in data["fits"].values():
        assert fit["exponent"] == pytest.approx(-1.0, rel=0.1)


def test_verify_polynomial_rejects_small_exponents():
    assert main(["verify-polynomial", "--model", "preset:poly", "--pert", "preset:poly", "--beta", "0.2", "--gamma", "0.2"]) == EXIT_CONFIG


def test_simulate(tmp_path):
    out = tmp_path / "sim.json"
    model = _write(tmp_path / "m.json", model_to_dict(build_diagonal_model("inverse", 20)))
    assert main(["simulate", "--model", model, "--t-max", "1", "--n-times", "2", "--out", str(out)]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["norms"][1] == pytest.approx(math.exp(-1))
    b = np.zeros((1, 20), complex)
    b[0, 0] = 2
    pert = _write(tmp_path / "p.json", factors_to_dict(PerturbationFactors(b, b)))
    assert main(["simulate", "--model", model, "--pert", pert, "--t-max", "400", "--n-times", "2", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["growth"] is True


def test_reproduce_poly_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["reproduce", "poly", "--out", str(a)]) == EXIT_OK
    assert main(["reproduce", "poly", "--out", str(b)]) == EXIT_OK
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert dumps(strip_timestamps(da)) == dumps(strip_timestamps(db))
    assert all(row["passed"] for row in da["table"])


def test_dumps_sorted_and_finite():
    text = dumps({"b": math.inf, "a": np.float64(1.5), "c": [np.int64(2), 1j]})
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 1.5, "b": "inf", "c": [2, [0.0, 1.0]]}


def test_verify_oversized_factors_exit_one(tmp_path):
    model = _write(tmp_path / "m.json", model_to_dict(build_diagonal_model("inverse", 60)))
    cert = tmp_path / "cert.json"
    main(["certify", "--model", model, "--out", str(cert)])
    b = np.zeros((1, 60), complex)
    b[0, 0] = 2
    pert = _write(tmp_path / "p.json", factors_to_dict(PerturbationFactors(b, b)))
    args = ["verify", "--model", model, "--pert", pert, "--cert", str(cert), "--grid-radii", "10", "--grid-angles", "5"]
    args += ["--grid-nx", "5", "--grid-ny", "9", "--grid-xi", "7"]
    assert main(args) == EXIT_FAIL
