import json
import subprocess
import sys
from fractions import Fraction

import pytest

from dyc.cli import run
from dyc.cube import Cube
from dyc.forest import CubeFamily


def _chain5(path):
    S = CubeFamily([Cube((0,), Fraction(1, 2 ** j)) for j in range(5)])
    path.write_text(json.dumps(S.to_json()))
    return str(path)


def test_carleson_constant(tmp_path, capsys):
    fam = _chain5(tmp_path / "chain5.json")
    assert run(["carleson", "constant", "--family", fam]) == 0
    assert capsys.readouterr().out.strip() == "31/16"


def test_three_verify(capsys):
    assert run(["three", "verify", "--dim", "1", "--depth", "4"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]


def test_usage_errors():
    for argv in (["carleson", "--bogus"], ["carleson"], []):
        with pytest.raises(SystemExit) as e:
            run(argv)
        assert e.value.code == 2


def test_entry_point_exit_codes(tmp_path):
    exe = [sys.executable, "-m", "dyc"]
    r = subprocess.run(exe + ["carleson", "--bogus"], capture_output=True, text=True)
    assert r.returncode == 2
    r = subprocess.run(exe + ["carleson", "constant", "--family", str(tmp_path / "missing.json")], capture_output=True, text=True)
    assert r.returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"cubes": [{"dim": 1, "corner": [{"m": "1", "e": 1}], "side": {"m": "1", "e": 0}}]}))
    r = subprocess.run(exe + ["carleson", "constant", "--family", str(bad)], capture_output=True, text=True)
    assert r.returncode == 1
    assert json.loads(r.stderr)["error"] == "NOT_IN_LATTICE"


def test_library_error_exit_code(tmp_path, capsys):
    grid = tmp_path / "g.json"
    assert run(["gen", "grid", "--profile", "smooth", "--depth", "3", "--seed", "1", "--out", str(grid)]) == 0
    assert run(["osc", "family", "--grid", str(grid)]) == 1
    assert json.loads(capsys.readouterr().err)["error"] == "SUPPORT_MARGIN"


def test_determinism(tmp_path):
    fam = _chain5(tmp_path / "c.json")
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run(["dominate", "--kernel", "maxpow", "--m", "2", "--depth", "5", "--seed", "3", "--report", str(out)]) == 0
        obj = json.loads(out.read_text())
        obj.pop("runtime_ms")
        outs.append(json.dumps(obj, sort_keys=True))
        w = tmp_path / f"w{k}.json"
        assert run(["weighted", "kbound", "--family", fam, "--seed", "9", "--out", str(w)]) == 0
        outs.append(w.read_text())
    assert outs[0] == outs[2] and outs[1] == outs[3]


def test_gen_roundtrip(tmp_path):
    p = tmp_path / "f.json"
    assert run(["gen", "family", "--depth", "4", "--seed", "2", "--out", str(p)]) == 0
    S = CubeFamily.from_json(json.loads(p.read_text()))
    assert json.loads(json.dumps(S.to_json())) == json.loads(p.read_text())


def test_witness_file_used(tmp_path, capsys):
    fam = _chain5(tmp_path / "c.json")
    assert run(["carleson", "witness", "--family", fam, "--eta", "1/2"]) == 0
    w = json.loads(capsys.readouterr().out)["witness"]
    wp = tmp_path / "w.json"
    wp.write_text(json.dumps(w))
    assert run(["weighted", "main", "--family", fam, "--witness", str(wp), "--profile", '{"p": [4, 4]}']) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["pass"] and out["report"]["exact"]["eta"] == "1/2"


def test_suite_subset(tmp_path):
    out = tmp_path / "rep.json"
    assert run(["suite", "9", "11", "--seed", "1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and [c["check"] for c in rep["checks"]] == ["09_lambda_oscillation", "11_summation_trick"]
    assert run(["suite", "nope"]) == 2
