import csv
import io
import json
import subprocess
import sys

import pytest

from alphastab import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_contains_paper_points(capsys):
    code, out, _ = run(["classify", "--p", "3", "1", "--format", "csv"], capsys)
    assert code == 0
    rows = {(int(r["q1"]), int(r["q2"])): r["class"] for r in csv.DictReader(io.StringIO(out))}
    expected = {(-2, 3): "0", (-1, 2): "I0", (0, -2): "I+", (2, -2): "I-", (-1, 1): "II"}
    for q, k in expected.items():
        assert rows[q] == k


def test_classify_json_and_file(tmp_path, capsys):
    path = tmp_path / "c.json"
    code, out, _ = run(["classify", "--p", "1", "0", "--out", str(path)], capsys)
    assert code == 0 and out == ""
    data = json.loads(path.read_text())
    assert all(o["class"] not in ("I0", "I+", "I-") for o in data["orbits"])
    assert json.loads(json.dumps(data)) == data


def test_classify_zero_vector(capsys):
    code, _, err = run(["classify", "--p", "0", "0"], capsys)
    assert code == 2 and "nonzero" in err


def test_solve_type_one(tmp_path, capsys):
    path = tmp_path / "s.json"
    code, _, err = run(["solve", "--p", "3", "1", "--q", "-1", "2", "--alpha", "0",
                        "--out", str(path)], capsys)
    assert code == 0
    d = json.loads(path.read_text())
    assert d["lambda"] > 0 and d["residual"] <= 1e-8 and d["class"] == "I0"
    assert "lambda*=" in err


def test_solve_type_two_exit_3(capsys):
    code, _, _ = run(["solve", "--p", "3", "1", "--q", "-1", "1"], capsys)
    assert code == 3


def test_solve_auto_select(capsys):
    code, out, _ = run(["solve", "--p", "2", "0"], capsys)
    d = json.loads(out)
    assert code == 0 and d["orbit"]["q_hat"] in ([0, 1], [0, -1]) and d["class"] == "I0"


def test_solve_no_type_one(capsys):
    code, _, _ = run(["solve", "--p", "1", "1"], capsys)
    assert code == 3


def test_solve_parallel_q_is_usage_error(capsys):
    code, _, _ = run(["solve", "--p", "3", "1", "--q", "6", "2"], capsys)
    assert code == 2


def test_verify_pass(capsys):
    code, out, _ = run(["verify", "--p", "3", "1", "--alpha", "1", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and all(r["status"] == "pass" for r in rows)


def test_verify_bad_tol(capsys):
    code, _, _ = run(["verify", "--p", "3", "1", "--tol", "-1"], capsys)
    assert code == 2


def test_verify_failure_exit_5(monkeypatch, capsys):
    def broken(*args, **kwargs):
        return [cli.Check("forced", 1.0, 0.0)]
    monkeypatch.setattr(cli, "verify_flow", broken)
    code, _, err = run(["verify", "--p", "3", "1"], capsys)
    assert code == 5 and "forced" in err


def test_sweep_rows(capsys):
    code, out, _ = run(["sweep", "--pmax", "3", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == cli.SWEEP_HEADER
    for r in rows:
        p = (int(r["p1"]), int(r["p2"]))
        if p[0] ** 2 + p[1] ** 2 > 2:
            assert float(r["lambda_star"]) > 0
        else:
            assert r["class"] == "none"


def test_sweep_alpha_grid(capsys):
    alphas = ",".join(str(0.25 * i) for i in range(9))
    code, out, _ = run(["sweep", "--p", "3", "1", "--alphas", alphas, "--format", "csv",
                        "--workers", "2"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 9
    assert all(0 < float(r["lambda_star"]) < float("inf") for r in rows)


def test_sweep_empty_range(capsys):
    code, out, _ = run(["sweep", "--pmin", "5", "--pmax", "4", "--format", "csv"], capsys)
    assert code == 0 and out.strip() == ",".join(cli.SWEEP_HEADER)


def test_spectrum_type_zero(capsys):
    code, out, _ = run(["spectrum", "--p", "3", "1", "--q", "-2", "3", "--N", "60"], capsys)
    d = json.loads(out)
    assert code == 0
    assert max(abs(re) for re, _ in d["eigenvalues"]) <= 1e-9
    assert d["band_radius"] == pytest.approx(2 * 0.55)


def test_spectrum_type_one(capsys):
    code, out, _ = run(["spectrum", "--p", "3", "1", "--q", "-1", "2", "--N", "100",
                        "--format", "csv"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    unstable = [float(r["re"]) for r in rows if abs(float(r["re"])) >= 1e-6]
    assert code == 0 and len(unstable) == 2
    assert sorted(unstable)[1] == pytest.approx(-sorted(unstable)[0], rel=1e-10)
    assert float(rows[0]["band_radius"]) == pytest.approx(0.7)


def test_spectrum_bad_n(capsys):
    code, _, _ = run(["spectrum", "--p", "3", "1", "--q", "-1", "2", "--N", "1"], capsys)
    assert code == 2


def test_unknown_flag_is_usage_error(capsys):
    assert cli.main(["solve", "--p", "3"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "alphastab", "classify", "--p", "2", "0",
                          "--format", "csv"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("q1,q2,class")
