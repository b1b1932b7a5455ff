from __future__ import annotations

import subprocess
import sys
from importlib import resources

import pytest

from ossdoorway import __version__
from ossdoorway.cli import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main


@pytest.fixture
def sim_config(tmp_path):
    path = tmp_path / "svc.yaml"
    path.write_text(
        f"data_dir: {tmp_path / 'data'}\nhosting:\n  mode: simulated\n"
    )
    return str(path)


@pytest.fixture
def full_run_path(tmp_path):
    text = resources.files("ossdoorway.data").joinpath("full_run.yaml").read_text("utf-8")
    path = tmp_path / "full_run.yaml"
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.fixture
def demo_csv(tmp_path):
    text = (
        resources.files("ossdoorway.data")
        .joinpath("demo_questionnaire.csv")
        .read_text("utf-8")
    )
    path = tmp_path / "demo.csv"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_version_flag():
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["simulate"])  # missing required args
    assert excinfo.value.code == EXIT_USAGE


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == EXIT_USAGE


def test_simulate_full_run(sim_config, full_run_path, capsys):
    code = main(["simulate", "--script", full_run_path, "--config", sim_config])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "quests completed: 3/3" in out
    assert "mismatches: 0" in out


def test_simulate_mismatch_exit_code(sim_config, tmp_path, capsys):
    script = tmp_path / "bad.yaml"
    script.write_text(
        "user: x\nactions:\n"
        "  - action: comment\n    issue: quest1\n    body: nothing\n"
        "    expect: satisfied\n"
    )
    code = main(["simulate", "--script", str(script), "--config", sim_config])
    assert code == EXIT_VALIDATION


def test_simulate_requires_simulated_mode(tmp_path, full_run_path):
    config = tmp_path / "live.yaml"
    config.write_text(
        f"data_dir: {tmp_path / 'data'}\nhosting:\n  mode: live\n"
    )
    code = main(["simulate", "--script", full_run_path, "--config", str(config)])
    assert code == EXIT_VALIDATION


def test_simulate_bad_script_validation_error(sim_config, tmp_path, capsys):
    script = tmp_path / "broken.yaml"
    script.write_text("user: x\nactions:\n  - action: teleport\n")
    code = main(["simulate", "--script", str(script), "--config", sim_config])
    assert code == EXIT_VALIDATION
    assert "error:" in capsys.readouterr().err


def test_enroll_and_report(sim_config, demo_csv, capsys):
    code = main(["enroll", "--user", "zoe", "--config", sim_config])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "sandbox/zoe" in out

    code = main(["report", "--dataset", demo_csv, "--segment", "segment"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "| Question | Pre mean | Pre median | Post mean | Post median |" in out
    assert "Segmented comparison" in out


def test_report_missing_file_is_runtime_error(capsys):
    code = main(["report", "--dataset", "/nonexistent.csv"])
    assert code == 3


def test_report_invalid_dataset_validation(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("participant_id,segment,phase,q1\nonly,three,cols,1\n")
    code = main(["report", "--dataset", str(path)])
    assert code == EXIT_VALIDATION


def test_bad_config_validation_exit(tmp_path, full_run_path):
    config = tmp_path / "bad.yaml"
    config.write_text("hosting: {mode: nope}\n")
    code = main(["simulate", "--script", full_run_path, "--config", str(config)])
    assert code == EXIT_VALIDATION


def test_console_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "ossdoorway.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert __version__ in result.stdout
