from __future__ import annotations

import os
import subprocess
import sys

import pytest

from mlcforge.cli import main

from conftest import MOCK_BRIDGE

BRIDGE_ARG = f"{sys.executable} {MOCK_BRIDGE}"


def run_cli(*argv) -> int:
    return main(list(argv))


def test_check_demo_exits_zero(demo_dir, capsys):
    assert run_cli("-C", demo_dir, "check") == 0
    out = capsys.readouterr().out
    assert "0 error(s)" in out


def test_check_reports_errors_with_exit_1(tmp_path, capsys):
    (tmp_path / "mlc.project").write_text("project = broken\n")
    (tmp_path / "x.nal").write_text("component ???")
    assert run_cli("-C", str(tmp_path), "check") == 1
    assert "error[" in capsys.readouterr().out


def test_build_then_rebuild_all_skip(tmp_project, capsys):
    assert run_cli("-C", tmp_project, "build", "--bridge", BRIDGE_ARG) == 0
    first = capsys.readouterr().out
    assert "cold-train" in first
    assert os.path.isdir(os.path.join(tmp_project, "gen"))
    assert run_cli("-C", tmp_project, "build", "--bridge", BRIDGE_ARG) == 0
    second = capsys.readouterr().out
    assert "skip[up-to-date]" in second and "cold-train" not in second


def test_build_force_retrains(tmp_project, capsys):
    assert run_cli("-C", tmp_project, "build", "--bridge", BRIDGE_ARG) == 0
    capsys.readouterr()
    assert run_cli("-C", tmp_project, "build", "--force", "--bridge", BRIDGE_ARG) == 0
    assert "cold-train[forced]" in capsys.readouterr().out


def test_train_selected_unit_only(tmp_project, capsys):
    assert run_cli("-C", tmp_project, "build", "--bridge", BRIDGE_ARG) == 0
    capsys.readouterr()
    assert run_cli("-C", tmp_project, "train", "digits", "--force", "--bridge", BRIDGE_ARG) == 0
    out = capsys.readouterr().out
    assert "digits: cold-train[forced]" in out
    assert "operators: skip" in out


def test_run_oracle_scenario(tmp_project, capsys):
    code = run_cli("-C", tmp_project, "run", "scenarios/calculator.scn")
    out = capsys.readouterr().out
    assert code == 0, out
    assert "pass  r2" in out
    assert "message_sent" in out


def test_run_trace_out_and_report_with_figure(tmp_project, tmp_path, capsys):
    trace_path = str(tmp_path / "trace.tsv")
    report_path = str(tmp_path / "run_report.txt")
    code = run_cli(
        "-C", tmp_project, "run", "scenarios/calculator.scn",
        "--trace-out", trace_path, "--report", report_path,
    )
    assert code == 0
    assert os.path.isfile(trace_path)
    first_line = open(trace_path).readline()
    assert first_line.split("\t")[2] == "state_entered"
    report = open(report_path).read()
    assert 'kind: "run"' in report and "assertions" in report
    assert os.path.isfile(str(tmp_path / "run_report.timeline.png"))


def test_build_report_with_training_figures(tmp_project, tmp_path, capsys):
    report_path = str(tmp_path / "build_report.txt")
    assert run_cli("-C", tmp_project, "build", "--bridge", BRIDGE_ARG, "--report", report_path) == 0
    text = open(report_path).read()
    assert 'kind: "build"' in text
    figures = [name for name in os.listdir(tmp_path) if name.endswith(".training.png")]
    assert len(figures) == 3


def test_pack_and_artifacts_list(tmp_project, capsys):
    assert run_cli("-C", tmp_project, "build", "--bridge", BRIDGE_ARG) == 0
    capsys.readouterr()
    assert run_cli("-C", tmp_project, "pack", "source") == 0
    assert run_cli("-C", tmp_project, "pack", "model", "--unit", "digits") == 0
    assert run_cli("-C", tmp_project, "pack", "dataset", "--unit", "digits") == 0
    capsys.readouterr()
    assert run_cli("-C", tmp_project, "artifacts", "list") == 0
    out = capsys.readouterr().out
    assert "model-archive" in out and "source-archive" in out and "dataset-archive" in out


def test_unknown_subcommand_exit_3():
    proc = subprocess.run(
        [sys.executable, "-m", "mlcforge.cli", "frobnicate"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 3


def test_missing_scenario_is_usage_error(tmp_project):
    assert run_cli("-C", tmp_project, "run", "scenarios/ghost.scn") == 3


def test_build_without_bridge_fails_cleanly(tmp_project, capsys):
    code = run_cli("-C", tmp_project, "build", "--bridge", "")
    # manifest bridge points at the runtime; strip it to simulate absence
    manifest = os.path.join(tmp_project, "mlc.project")
    text = "\n".join(
        line for line in open(manifest).read().splitlines() if not line.startswith("bridge")
    )
    open(manifest, "w").write(text + "\n")
    code = run_cli("-C", tmp_project, "build")
    captured = capsys.readouterr()
    assert code == 2
    assert "no bridge command" in captured.err


def test_lint_automl_reports_fixes(tmp_path, capsys):
    root = tmp_path / "lintable"
    root.mkdir()
    (root / "mlc.project").write_text("project = lintable\n")
    (root / "d.csv").write_text("a,label\n100,0\n200,1\n")
    (root / "s.scl").write_text(
        'thing t { ml { features a labels ON label dataset "d.csv" model_algorithm mlp { } } '
        "statechart { initial s state s { } } }"
    )
    assert run_cli("-C", str(root), "lint") == 0
    plain = capsys.readouterr().out
    assert "lint-r3" in plain
    assert run_cli("-C", str(root), "lint", "--automl") == 0
    fixed = capsys.readouterr().out
    assert "lint-autofix" in fixed
