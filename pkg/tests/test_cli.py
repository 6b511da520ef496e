"""Command line: outputs, determinism and exit codes."""

import csv
import io
import json

import numpy as np
import pytest

import grunwald.cli as cli_mod
from grunwald import RateMatrixViolation


def run(argv, capsys):
    """(exit code, stdout, stderr) of one invocation."""
    with pytest.raises(SystemExit) as exc:
        cli_mod.main(argv)
    out, err = capsys.readouterr()
    return exc.value.code, out, err


def test_coeffs_csv(capsys):
    """Property: coefficient output has one header line and N+1 rows."""
    code, out, _ = run(["coeffs", "--h", "0.1", "--N", "20"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 22
    assert sum(1 for r in rows if r and r[0] == "j") == 1


def test_coeffs_identity_violation(capsys, tmp_path):
    """Property: an unattainable tolerance exits with code 2 and still writes the report."""
    rep = tmp_path / "rep.json"
    code, _, err = run(["coeffs", "--h", "0.1", "--N", "50", "--tol", "1e-40", "--report", str(rep)], capsys)
    assert code == 2 and "identity" in err
    assert json.loads(rep.read_text())["ok"] is False


@pytest.mark.parametrize("argv", [
    ["coeffs", "--h", "-0.1", "--N", "5"],
    ["coeffs", "--h", "0.1", "--N", "5", "--alpha", "2.5"],
    ["solve", "--case", "DD", "--t", "-1"],
    ["solve", "--case", "XY", "--t", "1"],
    ["solve", "--case", "DD"],
    ["simulate", "--case", "DD", "--paths", "1"],
    ["study", "--case", "DD", "--ladder", "15,20"],
    ["study", "--case", "DD", "--ladder", "a,b"],
])
def test_usage_errors_exit_one(argv, capsys):
    """Property: invalid options and parameters exit with code 1."""
    code, _, _ = run(argv, capsys)
    assert code == 1


def test_solve_json_envelope(capsys):
    """Property: JSON output carries version, the resolved configuration, columns and rows."""
    code, out, _ = run(["solve", "--case", "nn", "--direction", "forward", "--n", "15", "--t", "0.3",
                        "--init", "one", "--normalize", "--format", "json"], capsys)
    env = json.loads(out)
    assert code == 0 and set(env) == {"metadata", "columns", "rows"}
    meta = env["metadata"]
    assert meta["version"] == cli_mod.__version__ and meta["case"] == "NN" and meta["n"] == 15
    assert env["columns"] == ["x", "value"] and len(env["rows"]) == 16
    assert meta["mass_out"] == pytest.approx(1.0, abs=1e-12)


def test_solve_resolvent_and_dump(capsys, tmp_path):
    """Property: the resolvent path runs and the dumped matrix is a rate matrix of size n+1."""
    mfile = tmp_path / "m.csv"
    code, out, _ = run(["solve", "--case", "DN", "--resolvent", "--beta", "2", "--n", "7",
                        "--dump-matrix", str(mfile)], capsys)
    assert code == 0 and len(out.strip().split("\n")) == 9
    M = np.loadtxt(mfile, delimiter=",", skiprows=1)
    assert M.shape == (8, 8) and M.sum(axis=1).max() <= 1e-10


def test_rate_matrix_violation_exit_three(capsys, monkeypatch):
    """Property: a failed rate-matrix check exits with code 3."""
    def bad(*a, **k):
        raise RateMatrixViolation("negative off-diagonal")

    monkeypatch.setattr(cli_mod, "fiber_matrix", bad)
    code, _, err = run(["solve", "--case", "DD", "--t", "0.1", "--n", "7"], capsys)
    assert code == 3 and "rate matrix" in err


def test_simulate_deterministic(capsys, tmp_path):
    """Property: equal seeds reproduce the estimate and the dumped paths."""
    outs = []
    for k in range(2):
        p = tmp_path / f"paths{k}.csv"
        code, out, _ = run(["simulate", "--case", "ND", "--paths", "4000", "--seed", "5", "--t", "0.2",
                            "--dump-paths", str(p), "--dump-count", "3"], capsys)
        assert code == 0
        outs.append((out, p.read_text()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith("path_id,time,state,alive\n")


def test_simulate_compare_and_mismatch(capsys, monkeypatch):
    """Property: agreement exits 0; a shifted matrix value pushes |z| past the limit and exits 4."""
    argv = ["simulate", "--case", "DD", "--paths", "20000", "--seed", "1", "--t", "0.3", "--compare"]
    code, out, _ = run(argv, capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and abs(float(rows[0]["z"])) <= cli_mod.Z_LIMIT
    real = cli_mod.expm_uniformized
    monkeypatch.setattr(cli_mod, "expm_uniformized", lambda M, t, v: real(M, t, v) + 0.5)
    code, _, err = run(argv, capsys)
    assert code == 4 and "mismatch" in err


def test_scale_and_reference(capsys):
    """Property: scale and resolvent-reference produce the documented columns."""
    code, out, _ = run(["scale", "--i", "1", "--points", "5", "--m", "64"], capsys)
    assert code == 0 and len(out.strip().split("\n")) == 6
    code, out, _ = run(["resolvent-reference", "--case", "DD", "--n", "7"], capsys)
    assert code == 0 and out.startswith("x,")


def test_study_output(capsys, tmp_path):
    """Property: the study writes one row per ladder level to --out."""
    f = tmp_path / "s.csv"
    code, _, _ = run(["study", "--case", "DD", "--ladder", "15,31", "--out", str(f)], capsys)
    rows = list(csv.DictReader(io.StringIO(f.read_text())))
    assert code == 0 and [int(r["n"]) for r in rows] == [15, 31]


def test_version(capsys):
    """Property: --version exits 0 and prints the package version."""
    code, out, _ = run(["--version"], capsys)
    assert code == 0 and cli_mod.__version__ in out
