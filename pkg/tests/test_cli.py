import csv
import io
import json
import subprocess
import sys

import pytest

from tropkp.cli import main

GRID = "x:-1:1:4,t2:-1:1:4,t3:-1:1:4"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_analyze_single_loop(capsys):
    code, out = run(capsys, "analyze", "--example", "single_loop")
    doc = json.loads(out)
    assert code == 0
    assert doc["genus"] == [1, 1]
    assert doc["period_matrix"] == [["2"]]
    assert doc["positive_definite"] is True


def test_analyze_from_file(tmp_path, capsys):
    f = tmp_path / "curve.json"
    f.write_text(json.dumps({"vertices": [{"id": "a", "weight": 1}, {"id": "b", "weight": 0}],
                             "edges": [{"id": "e1", "tail": "a", "head": "b", "length": "1"},
                                       {"id": "e2", "tail": "a", "head": "b", "length": "3/2"}]}))
    code, out = run(capsys, "analyze", "--input", str(f))
    doc = json.loads(out)
    assert code == 0
    assert doc["genus"] == [1, 2]  # (h1, g)
    assert doc["period_matrix"] == [["5/2"]]


def test_troptheta_and_delaunay(capsys):
    code, out = run(capsys, "troptheta", "--example", "single_loop", "--alpha", "1/2")
    assert code == 0 and json.loads(out)["value"] == "0"
    code, out = run(capsys, "delaunay", "--example", "single_loop", "--alpha", "1/2")
    assert sorted(map(tuple, json.loads(out)["points"])) == [(0,), (1,)]


def test_kp_residual_small(capsys):
    code, out = run(capsys, "kp-residual", "--example", "two_loop", "--grid", GRID)
    doc = json.loads(out)
    assert code == 0
    assert doc["relative_residual"] < 1e-8
    assert doc["npoints"] == 64


def test_limit_theta_report(capsys):
    code, out = run(capsys, "limit-theta", "--example", "single_loop", "--s", "1e-2,1e-4,1e-6")
    doc = json.loads(out)
    assert code == 0 and doc["monotone"]
    assert doc["rows"][-1]["rel_error"] < 1e-6


def test_output_is_byte_identical(capsys):
    argv = ["u-grid", "--example", "elliptic_loop", "--grid", GRID]
    _, first = run(capsys, *argv)
    _, second = run(capsys, *argv)
    assert first == second


def test_csv_output(capsys):
    code, out = run(capsys, "u-grid", "--example", "single_loop", "--grid", GRID, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert len(rows) == 64
    assert set(rows[0]) >= {"x", "t2", "t3", "u_re", "u_im", "ok"}


def test_out_file(tmp_path, capsys):
    target = tmp_path / "tau.json"
    code, out = run(capsys, "tau", "--example", "single_loop", "--t", "0.1,0,0.2", "--out", str(target))
    assert code == 0 and out == ""
    assert "log_tau" in json.loads(target.read_text())


def test_malformed_json_exits_one(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert main(["analyze", "--input", str(f)]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_arguments_exit_one(capsys):
    assert main(["troptheta", "--example", "single_loop", "--alpha", "1/2,1/3"]) == 1
    assert main(["tau", "--example", "single_loop", "--kind", "family", "--s", "1.5"]) == 1
    assert main(["analyze", "--example", "single_loop", "--tol", "0"]) == 1


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "tropkp.cli", "troptheta", "--example", "two_loop"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value"] == "0"


@pytest.mark.slow
def test_verify_command(capsys):
    code = main(["verify"])
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert code == 0 and doc["passed"]
    assert len(doc["checks"]) == 8
    assert captured.err.count("PASS") == 8
