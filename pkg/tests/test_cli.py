import json
from pathlib import Path

import pytest

from flatkit.cli import main

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"
ACADEMIC = str(SYSTEMS / "academic.sys")


def test_check_academic_flat(capsys, tmp_path):
    report = tmp_path / "r.json"
    assert main(["check", ACADEMIC, "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert "verdict: flat" in out
    assert "flat output: (x1*(x3 + 1), x2 + 3*x4)" in out
    data = json.loads(report.read_text())
    assert data["verdict"] == "flat"
    assert data["flat_output"] == ["x1*(x3 + 1)", "x2 + 3*x4"]
    assert len(data["steps"]) == 3
    assert data["seed"] == 42


def test_decompose_prints_every_step(capsys):
    assert main(["decompose", ACADEMIC]) == 0
    out = capsys.readouterr().out
    assert out.count("== step") == 3


def test_check_exact_robot(capsys, tmp_path):
    report = tmp_path / "r.json"
    assert main(["check", str(SYSTEMS / "robot_exact.sys"), "--report", str(report)]) == 2
    data = json.loads(report.read_text())
    assert data["verdict"] == "not_flat"
    assert len(data["steps"]) == 1
    assert "no projectable subdistribution" in data["steps"][0]["reason"]


def test_check_euler_robot():
    assert main(["check", str(SYSTEMS / "robot_euler.sys"), "--quiet"]) == 0


def test_failure_injection_exit_code(academic, monkeypatch, capsys):
    import flatkit.cli as cli
    from flatkit.config import Config

    orig = cli._config
    monkeypatch.setattr(cli, "_config", lambda a: Config(**{**vars(orig(a)),
                                                            "straightening": False}))
    assert main(["check", ACADEMIC, "--quiet"]) == 3
    assert "verdict: inconclusive" in capsys.readouterr().out


@pytest.mark.parametrize("outputs,code", [
    (["x1*(x3+1)", "x2+3*x4"], 0),
    (["x1", "x2"], 2),
])
def test_verify_exit_codes(outputs, code):
    argv = ["verify", ACADEMIC, "--quiet"]
    for o in outputs:
        argv += ["--output", o]
    assert main(argv) == code


def test_verify_report(tmp_path):
    report = tmp_path / "v.json"
    main(["verify", ACADEMIC, "--output", "x1*(x3+1)", "--output", "x3",
          "--report", str(report)])
    data = json.loads(report.read_text())
    assert data["status"] == "verified" and data["R"] == [3, 2]
    assert data["symbolic"] and data["numeric"]["points"] == 100


def test_show_frelated(capsys):
    assert main(["show-frelated", ACADEMIC, "--output", "x1*(x3+1)",
                 "--output", "x2+3*x4"]) == 0
    out = capsys.readouterr().out
    assert "v = " in out and "w = " in out


@pytest.mark.parametrize("argv", [
    ["check", "missing.sys"],
    ["verify", ACADEMIC, "--output", "x1"],
    ["verify", ACADEMIC, "--output", "x1 +", "--output", "x2"],
    ["verify", ACADEMIC, "--output", "z9", "--output", "x2"],
])
def test_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err
