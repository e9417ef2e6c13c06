import json
import math

import numpy as np
import pytest
import yaml

from gmdreg.cli import main
from gmdreg.error_model import InnovationDist, LinearProcessSpec, generate_errors


@pytest.fixture
def csv_file(tmp_path):
    rng = np.random.default_rng(3)
    n = 50
    X = rng.uniform(0, 50, (n, 3))
    e = generate_errors(LinearProcessSpec(), InnovationDist.normal(), n, rng)
    y = -2 + X @ [3.0, 1.5, -4.3] + e
    path = tmp_path / "data.csv"
    rows = ["y,x1,x2,x3"] + [",".join(repr(float(v)) for v in (y[i], *X[i])) for i in range(n)]
    path.write_text("\n".join(rows) + "\n")
    return path


def _beta(out):
    return np.array([float(v) for v in out.strip().split()])


def test_estimate_gmd1(csv_file, tmp_path, capsys):
    out_json = tmp_path / "fit.json"
    assert main(["estimate", str(csv_file), "--method", "gmd1", "-o", str(out_json)]) == 0
    beta = _beta(capsys.readouterr().out)
    assert beta.shape == (4,)
    np.testing.assert_allclose(beta[1:], [3.0, 1.5, -4.3], atol=0.1)
    payload = json.loads(out_json.read_text())
    assert payload["converged"] is True
    assert payload["manifest"]["command"] == "estimate"
    np.testing.assert_allclose(payload["beta_hat"], beta, rtol=1e-9)


def test_estimate_gls_identity_equals_ols(csv_file, capsys):
    main(["estimate", str(csv_file), "--method", "gls", "--omega", "identity"])
    gls = _beta(capsys.readouterr().out)
    main(["estimate", str(csv_file), "--method", "ols"])
    ols = _beta(capsys.readouterr().out)
    np.testing.assert_allclose(gls, ols, rtol=1e-9, atol=1e-10)


def test_estimate_non_numeric_cell(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("y,x1\n1,2\n3,oops\n5,6\n7,8\n")
    assert main(["estimate", str(path)]) == 2
    err = capsys.readouterr().err
    assert "row 3" in err and "x1" in err  # file line, header is row 1


def test_estimate_missing_file(tmp_path, capsys):
    assert main(["estimate", str(tmp_path / "nope.csv")]) == 2


def test_estimate_degenerate_measure_runs(csv_file, capsys):
    assert main(["estimate", str(csv_file), "--measure", "degenerate", "--omega", "identity"]) == 0
    assert _beta(capsys.readouterr().out).shape == (4,)


def _write_config(path, **overrides):
    cfg = {"n_values": [20], "replicates": 2, "innovations": ["normal"], "seed": 7}
    cfg.update(overrides)
    path.write_text(yaml.safe_dump(cfg))
    return path


def test_simulate_writes_outputs_deterministically(tmp_path, capsys):
    cfg = _write_config(tmp_path / "c.yaml", innovations=["normal", {"law": "laplace", "scale": 5}])
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "a")]) == 0
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "b")]) == 0
    for name in ("summary.txt", "summary.csv", "summary.json"):
        assert (tmp_path / "a" / name).exists()
    a = (tmp_path / "a" / "summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "summary.csv").read_bytes()
    payload = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert len(payload["cells"]) == 2
    assert payload["manifest"]["base_seed"] == 7
    assert b"base_seed=7" in a


def test_simulate_schema_errors_list_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump({"n_values": [20], "replicats": 2, "fit": {"tolerance": 1}}))
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    for key in ("replicats", "replicates", "innovations", "fit.tolerance"):
        assert key in err


def test_simulate_seed_override(tmp_path, capsys):
    cfg = _write_config(tmp_path / "c.json")
    main(["simulate", str(cfg), "-o", str(tmp_path / "a"), "--seed", "11"])
    assert b"base_seed=11" in (tmp_path / "a" / "summary.csv").read_bytes()


def test_diagnose_normal(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["diagnose", "--law", "normal", "--scale", "1", "--samples", "200000", "-o", str(out)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["f_norm_sq"] == pytest.approx(1 / (2 * math.sqrt(math.pi)), abs=1e-8)
    assert printed["tau"] == pytest.approx(1 / 3, abs=0.005)
    payload = json.loads(out.read_text())
    assert payload["tau"] == printed["tau"]


def test_diagnose_degenerate_measure_fails(capsys):
    assert main(["diagnose", "--measure", "degenerate", "--samples", "100"]) != 0
    assert "degenerate" in capsys.readouterr().err.lower()


def test_diagnose_with_design(csv_file, capsys):
    assert main(["diagnose", "--data", str(csv_file), "--omega", "oracle", "--samples", "5000"]) == 0
