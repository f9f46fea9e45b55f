import json
import subprocess
import sys

import pytest

from signed_consensus.cli import EX_ASSUMPTION, EX_CONFIG, EX_OK, EX_USAGE, main


def test_check_two_cliques(capsys):
    assert main(["check", "--preset", "thm1b"]) == EX_OK
    out = capsys.readouterr().out
    assert "*A1: true" in out and " A3: true" in out
    assert "Tp=2" in out


def test_check_failing_requirement(capsys):
    # the positive subgraph splits into two clusters, so no positive spanning tree
    assert main(["check", "--preset", "thm1b", "--require", "A4"]) == EX_ASSUMPTION


def test_check_unknown_assumption():
    assert main(["check", "--preset", "thm1b", "--require", "A12"]) == EX_USAGE


def test_no_source():
    assert main(["run"]) == EX_USAGE


def test_no_command():
    assert main([]) == EX_USAGE


def test_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == EX_CONFIG


def test_invalid_override(tmp_path):
    assert main(["run", "--preset", "thm1b", "--set", "params.alpha=-1", "--out", str(tmp_path)]) == EX_CONFIG


def test_preset_then_run(tmp_path):
    assert main(["preset", "thm1b", "--out", str(tmp_path), "--quiet"]) == EX_OK
    cfg = tmp_path / "thm1b.json"
    assert json.loads(cfg.read_text())["name"] == "thm1b"
    out = tmp_path / "run"
    code = main(["run", "--config", str(cfg), "--set", "T=1", "--set", "env.b.c=0", "--set", "env.d.c=0",
                 "--trials", "2", "--out", str(out), "--quiet"])
    assert code == EX_OK
    lines = (out / "trajectories" / "trial_0000.csv").read_text().splitlines()
    assert len(lines) == 3
    first, second = lines[1].split(","), lines[2].split(",")
    assert (first[0], second[0]) == ("0", "1")
    assert first[1:4] == second[1:4]


def test_rerun_byte_identical(tmp_path):
    args = ["run", "--preset", "thm4", "--set", "T=200", "--trials", "5", "--quiet"]
    assert main(args + ["--out", str(tmp_path / "a")]) == EX_OK
    assert main(args + ["--out", str(tmp_path / "b")]) == EX_OK
    for rel in ("summary.json", "trajectories/trial_0004.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_constants(capsys):
    assert main(["constants", "--preset", "thm2", "--blocks", "3"]) == EX_OK
    out = capsys.readouterr().out
    assert "K0=7" in out and "x_minus_y_in_unit_interval: True" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "signed_consensus.cli", "check", "--preset", "thm4"],
                          capture_output=True, text=True)
    assert proc.returncode == EX_OK
    assert "A9: true" in proc.stdout
