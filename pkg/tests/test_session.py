from __future__ import annotations

from importlib import resources

import pytest

from ossdoorway.session import (
    ScriptError,
    load_session_script,
    load_session_script_file,
    simulate_session,
)


def _full_run_text() -> str:
    return (
        resources.files("ossdoorway.data").joinpath("full_run.yaml").read_text("utf-8")
    )


def test_full_run_completes_everything(catalog):
    script = load_session_script(_full_run_text(), catalog)
    assert len(script.actions) == 12
    result = simulate_session(script, catalog)
    assert result.mismatches == 0
    assert "quests completed: 3/3" in result.transcript
    assert "xp: 310" in result.transcript
    assert "level: 4" in result.transcript
    assert "badges: 4" in result.transcript
    assert "progress: 12/12" in result.transcript
    assert "` 100%" in result.transcript


def test_full_run_transcript_deterministic(catalog):
    script = load_session_script(_full_run_text(), catalog)
    transcripts = {simulate_session(script, catalog).transcript for _ in range(3)}
    assert len(transcripts) == 1


def test_wrong_answer_then_correction(catalog):
    text = """
user: bob
actions:
  - action: comment
    issue: quest1
    body: "answer: /issues"
    expect: satisfied
  - action: comment
    issue: quest1
    body: "i forgot what to write"
    expect: rejected
  - action: comment
    issue: quest1
    body: "it was /pulls of course"
    expect: satisfied
"""
    script = load_session_script(text, catalog)
    result = simulate_session(script, catalog)
    assert result.mismatches == 0
    decisions = [s.decision for s in result.summaries]
    assert decisions == ["satisfied", "rejected", "satisfied"]
    assert "-> rejected (expected rejected)" in result.transcript
    # streak reset: the third event is only 1 into the new run, no bonus
    assert "streak +" not in result.transcript


def test_empty_script(catalog):
    script = load_session_script("user: carol\nactions: []\n", catalog)
    result = simulate_session(script, catalog)
    assert result.mismatches == 0
    assert result.summaries == []
    assert "xp: 0" in result.transcript
    assert "` 0%" in result.transcript


def test_expectation_mismatch_counted(catalog):
    text = """
user: dana
actions:
  - action: comment
    issue: quest1
    body: "this will not match anything"
    expect: satisfied
"""
    result = simulate_session(load_session_script(text, catalog), catalog)
    assert result.mismatches == 1
    assert "MISMATCH" in result.transcript


def test_unknown_quest_reference_fails_before_execution(catalog):
    text = """
user: erin
actions:
  - action: comment
    issue: quest99
    body: "hello"
"""
    with pytest.raises(ScriptError, match="unknown quest"):
        load_session_script(text, catalog)


def test_malformed_scripts_rejected(catalog):
    with pytest.raises(ScriptError, match="name a user"):
        load_session_script("actions: []", catalog)
    with pytest.raises(ScriptError, match="action must be one of"):
        load_session_script("user: x\nactions:\n  - action: dance\n", catalog)
    with pytest.raises(ScriptError, match="needs a body"):
        load_session_script(
            "user: x\nactions:\n  - action: comment\n    issue: quest1\n", catalog
        )
    with pytest.raises(ScriptError, match="expect must be"):
        load_session_script(
            "user: x\nactions:\n"
            "  - action: comment\n    issue: quest1\n    body: b\n    expect: maybe\n",
            catalog,
        )


def test_shipped_script_loads_from_file(catalog, tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(_full_run_text(), encoding="utf-8")
    script = load_session_script_file(str(path), catalog)
    assert script.user == "alice"
