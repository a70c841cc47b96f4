from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from oddcf.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_expand_text(capsys):
    code, out, _ = run(capsys, "expand", "--alpha", "1/3", "--x", "-5/3")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "[0; -1,-3,-3,-1]"
    assert lines[1:] == ["-1/1", "-3/2", "-8/5", "-5/3"]


def test_expand_csv_and_json(capsys):
    _, out, _ = run(capsys, "expand", "--alpha", "1/3", "--x", "-5/3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["p"], r["q"]) for r in rows][-1] == ("-5", "3")
    _, out, _ = run(capsys, "expand", "--alpha", "1/3", "--x", "-5/3", "--format", "json")
    obj = json.loads(out)
    assert obj["word"]["terminated"] and obj["word"]["digits"][0] == [-1, 1]


def test_expand_zero(capsys):
    code, out, _ = run(capsys, "expand", "--alpha", "1", "--x", "0", "--format", "json")
    assert code == 0 and json.loads(out)["word"]["digits"] == []


def test_expand_alpha_too_large(capsys):
    code, out, err = run(capsys, "expand", "--alpha", "2")
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "unsupported_alpha"


def test_expand_outside_interval(capsys):
    code, _, err = run(capsys, "expand", "--alpha", "1/3", "--x", "1/2")
    assert code == 2 and json.loads(err)["error"] == "domain"


def test_float_input_needs_annotation(capsys):
    code, out, _ = run(capsys, "orbit", "--alpha", "1/2", "--x", "0.123456789@100", "--steps", "2")
    assert code == 0 and all(line.endswith("@100") for line in out.splitlines())
    code, out, _ = run(capsys, "expand", "--alpha", "g", "--x", "(-1+1*sqrt(5))/4", "--precision", "200",
                       "--max-digits", "4")
    assert code == 0 and out.splitlines()[0] == "[0; +3,+5,-1,+3]"


def test_natext_mass(capsys):
    code, out, _ = run(capsys, "natext", "mass", "--alpha", "1.3")
    assert code == 0
    assert abs(float(out) - 3 * math.log((1 + 5 ** 0.5) / 2)) < 1e-12


def test_natext_check(capsys):
    code, out, _ = run(capsys, "natext", "check", "--alpha", "0.56", "--iters", "100000")
    assert code == 0 and out.strip() == "violations 0"


def test_natext_build_outputs(capsys, tmp_path):
    rects = tmp_path / "rects.csv"
    code, out, _ = run(capsys, "natext", "build", "--alpha", "1.3", "--format", "json", "--emit-rects", str(rects))
    obj = json.loads(out)
    assert code == 0 and obj["regime"] == "gt_one" and len(obj["rects"]) == 3
    assert rects.read_text().splitlines()[0] == "x_lo,x_hi,y_lo,y_hi"


def test_natext_build_above_G(capsys):
    code, _, err = run(capsys, "natext", "build", "--alpha", "1.6181")
    assert code == 2 and json.loads(err)["error"] == "unsupported_alpha"


def test_entropy_csv_is_deterministic(capsys, tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        with pytest.warns(UserWarning):
            code, _, _ = run(capsys, "entropy", "--alpha-lo", "0.25", "--alpha-hi", "0.3333", "--steps", "4",
                             "--iters", "20000", "--seed", "42", "--out", str(p))
        assert code == 0
    a, b = (p.read_text() for p in paths)
    assert a == b
    rows = list(csv.DictReader(io.StringIO(a)))
    assert len(rows) == 4 and rows[0]["alpha"] == "1/4" and rows[0]["unproven_regime"] == "true"


def test_matching_verify(capsys):
    code, out, _ = run(capsys, "matching", "verify", "--family", "c", "--n-min", "3", "--n-max", "12")
    assert code == 0 and out.splitlines()[-1] == "10/10 pass"
    code, out, _ = run(capsys, "matching", "verify", "--family", "a", "--n-max", "4", "--format", "json")
    assert [r["pass"] for r in json.loads(out)] == [True, True]


def test_matching_scan(capsys):
    code, out, _ = run(capsys, "matching", "scan", "--lo", "0.61", "--hi", "0.99", "--steps", "50")
    assert code == 0 and out.splitlines()[-1] == "matched 50/50"
    _, out, _ = run(capsys, "matching", "scan", "--lo", "0.2", "--hi", "0.4", "--steps", "5", "--tol", "1e-20",
                    "--precision", "512", "--format", "csv")
    assert out.splitlines()[0] == "alpha,N,M,delta,kind,classification"


def test_matching_alg(capsys):
    code, out, _ = run(capsys, "matching", "alg2", "--alpha", "14/47")
    assert code == 0 and out.strip() == "alg2 pass (N,M)=(9,6)"
    code, out, _ = run(capsys, "matching", "alg1", "--alpha", "14/47", "--delta", "1/100000000")
    assert code == 0 and "(N,M)=(10,7)" in out


def test_tables(capsys):
    code, out, _ = run(capsys, "tables", "table1", "--n-max", "4", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and len(rows) == 8 and all(r["pass"] for r in rows)
    code, out, _ = run(capsys, "tables", "table2", "--n-max", "3", "--format", "csv")
    assert code == 0 and len(out.splitlines()) == 5


def test_bad_flag_values():
    with pytest.raises(SystemExit):
        main(["orbit", "--alpha", "1", "--x", "1/2", "--steps", "0"])


def test_env_precision(monkeypatch, capsys):
    monkeypatch.setenv("OCF_PRECISION_BITS", "96")
    from oddcf.numeric import make_float

    assert make_float(1).precision == 96


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "oddcf", "expand", "--alpha", "1/3", "--x", "1/3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.splitlines()[0] == "[0; +3]"
