import csv
import io
import json

import pytest

from twistlab.cli import parse_pair, run

CURVE = {"a_invariants": [0, -1, 1, -10, -20], "conductor": 11, "root_number": 1}


@pytest.fixture()
def cfg(tmp_path):
    p = tmp_path / "curve.json"
    p.write_text(json.dumps(CURVE))
    return str(p)


def test_invalid_json_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    assert run(["eval", "--curve", str(p), "--d", "-19"]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_missing_d_exit_1(cfg):
    assert run(["eval", "--curve", cfg]) == 1


def test_not_fundamental_exit_1(cfg):
    assert run(["eval", "--curve", cfg, "--d", "20"]) == 1


def test_eval(cfg, capsys):
    assert run(["eval", "--curve", cfg, "--d", "-19", "--s", "0.5+0.3i"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["sign"] == -1 and out["conductor"] == 11 * 361
    assert abs(out["Lambda"]["re"]) < 1e-12
    assert out["Lambda"]["budget"] < 1e-8


def test_coeffs(cfg, capsys):
    assert run(["coeffs", "--curve", cfg, "--n-max", "4"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["n", "A", "a"]
    assert [int(r[1]) for r in rows[1:]] == [1, -2, -1, 2]


def test_zeros_csv(cfg, tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert run(["zeros", "--curve", cfg, "--d", "-19", "--height", "10", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["certificate"]["passed"]
    assert out.read_text().splitlines()[0] == "n,gamma,bracket_width"


def test_explicit(cfg, capsys):
    assert run(["explicit", "--curve", cfg, "--d", "-19", "--pair", "bump:Q=2,a=-1,b=1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["closed"] and "budget" in rep


def test_bad_pair():
    from twistlab.errors import ConfigError

    with pytest.raises(ConfigError):
        parse_pair("gauss:2")
    with pytest.raises(ConfigError):
        parse_pair("bump:Q=2,a=1")


def test_jensen(cfg, capsys):
    assert run(["jensen", "--curve", cfg, "--d", "-115", "--mode", "auto"]) == 0
    led = json.loads(capsys.readouterr().out)
    assert led["mode"] == "even" and abs(led["residual"]) < 1e-4
    assert run(["jensen", "--curve", cfg, "--d", "-115", "--mode", "odd"]) == 1


def test_scan_empty_range(cfg, tmp_path):
    out = tmp_path / "e.csv"
    assert run(["scan", "--curve", cfg, "--d-range", "5:3", "--out", str(out), "--d0", "-3"]) == 0
    assert out.read_text().count("\n") == 1


def test_scan_deterministic_and_histogram(cfg, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert run(["scan", "--curve", cfg, "--d-range", "-120:120", "--d0", "-3", "--jobs", "1", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()
    svg = tmp_path / "h.svg"
    # fewer than 50 Rank0 records in this range
    assert run(["histogram", "--in", str(a), "--class", "rank0", "--bins", "10", "--svg", str(svg)]) == 2


def test_report_schema(cfg, capsys):
    assert run(["report", "--curve", cfg, "--d", "-115", "--height", "12", "--d0", "-3", "--jobs", "1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    for key in ("eq6_residual", "prop5_residual", "thm1_exponent", "eq2_residual"):
        assert key in rep and "budget" in rep[key]
        assert rep[key]["value"] is not None
    assert abs(rep["eq6_residual"]["value"]) < 1e-4
    assert abs(rep["eq2_residual"]["value"]) < 5e-3
