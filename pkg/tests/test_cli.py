from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from concfun import cli, harness

CFG = """theorem = t5
summand = laplace
counting = poisson
counting.lam = 20
m = 10000
seed = 4
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "t5.cfg"
    p.write_text(CFG)
    return p


def test_bound_default_and_config(capsys, cfg_path):
    assert cli.main(["bound", "t5-3rd"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["theorem_id"] == "t5-3rd" and rec["value"] == pytest.approx(0.12124)
    assert cli.main(["bound", "t5", "--config", str(cfg_path), "--halfopen"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["inputs"]["halfopen"] is True
    assert cli.main(["bound", "t6", "--config", str(cfg_path)]) == 2


def test_qhat(tmp_path, capsys):
    data = tmp_path / "x.txt"
    data.write_text("0 0 1\n2")
    assert cli.main(["qhat", "--input", str(data), "--z-grid", "0,1,2", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"z": [0.0, 1.0, 2.0], "q": [0.5, 0.75, 1.0]}
    assert cli.main(["qhat", "--input", str(data), "--z-grid", "0,1", "--halfopen"]) == 2


def test_limit(capsys):
    assert cli.main(["limit", "folded_student", "--grid", "0:2:3", "--r", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "z,q" and lines[2] == "1,0.5"
    assert cli.main(["limit", "generic_mixture", "--grid", "0:4:5", "--mix", "gamma:r=1,n=1", "--format", "json"]) == 0
    q = json.loads(capsys.readouterr().out)["q"]
    assert q[2] == pytest.approx(1 - np.exp(-np.sqrt(2) * 2 / 2), abs=1e-9)
    assert cli.main(["limit", "generic_mixture", "--grid", "0:1:2"]) == 2


def test_verify_roundtrip(tmp_path, cfg_path):
    out = tmp_path / "r.csv"
    rc = cli.main(["verify", "--config", str(cfg_path), "--format", "csv", "--out", str(out), "--seed", "11"])
    rep = harness.parse_report(out.read_text(), "csv")
    assert rc == (0 if rep.passed else 1)
    assert rep.seed == 11 and rep.theorem_id == "t5"


def test_verify_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("theorem = t5\n")
    assert cli.main(["verify", "--config", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_selfcheck():
    assert cli.main(["selfcheck"]) == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "concfun", "bound", "c4"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["theorem_id"] == "c4"
