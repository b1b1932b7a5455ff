"""Offline simulation: replay a scripted learner session end to end.

A session script is YAML: a learner login plus an ordered list of actions
(comment / assign / open_pr / close_issue / fork), each optionally
annotated with the outcome the author expects. The run executes against a
fresh :class:`~ossdoorway.simulated.SimulatedHost` and a throwaway store,
so transcripts are byte-identical run to run.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from pathlib import Path

import yaml

from .catalog import QuestCatalog
from .progression import Award, AwardKind, stats_snapshot
from .renderer import render_dashboard
from .service import EventSummary, OssDoorwayService
from .simulated import SimulatedHost
from .store import FileProgressStore

_ACTIONS = ("comment", "assign", "open_pr", "close_issue", "fork")
_OUTCOMES = ("satisfied", "rejected", "not_applicable", "duplicate")


class ScriptError(ValueError):
    """The session script is malformed or references unknown quests."""


@dataclass(frozen=True)
class ScriptAction:
    action: str
    issue: str | int | None = None  # quest id, issue number, or None
    body: str | None = None
    title: str | None = None
    assignee: str | None = None
    expect: str | None = None


@dataclass(frozen=True)
class SessionScript:
    user: str
    contributors: tuple[str, ...]
    actions: tuple[ScriptAction, ...]


def load_session_script(text: str, catalog: QuestCatalog) -> SessionScript:
    """Parse and validate a script before anything executes."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScriptError(f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScriptError("script top level must be a mapping")
    user = doc.get("user")
    if not isinstance(user, str) or not user:
        raise ScriptError("script must name a user")
    contributors = tuple(doc.get("contributors", ["carol", "dan"]))
    raw_actions = doc.get("actions", [])
    if not isinstance(raw_actions, list):
        raise ScriptError("actions must be a list")

    quest_ids = {quest.id for quest in catalog.quests}
    actions: list[ScriptAction] = []
    for i, raw in enumerate(raw_actions):
        where = f"actions[{i}]"
        if not isinstance(raw, dict):
            raise ScriptError(f"{where}: expected a mapping")
        action = raw.get("action")
        if action not in _ACTIONS:
            raise ScriptError(f"{where}: action must be one of {', '.join(_ACTIONS)}")
        issue = raw.get("issue")
        if isinstance(issue, str) and issue not in quest_ids:
            raise ScriptError(f"{where}: unknown quest {issue!r}")
        if action in ("comment", "assign", "close_issue") and issue is None:
            raise ScriptError(f"{where}: {action} needs an issue")
        if action == "comment" and not raw.get("body"):
            raise ScriptError(f"{where}: comment needs a body")
        if action == "open_pr" and not raw.get("title"):
            raise ScriptError(f"{where}: open_pr needs a title")
        expect = raw.get("expect")
        if expect is not None and expect not in _OUTCOMES:
            raise ScriptError(f"{where}: expect must be one of {', '.join(_OUTCOMES)}")
        actions.append(
            ScriptAction(
                action=action,
                issue=issue,
                body=raw.get("body"),
                title=raw.get("title"),
                assignee=raw.get("assignee"),
                expect=expect,
            )
        )
    return SessionScript(user=user, contributors=contributors, actions=tuple(actions))


def load_session_script_file(path: str, catalog: QuestCatalog) -> SessionScript:
    return load_session_script(Path(path).read_text(encoding="utf-8"), catalog)


@dataclass
class SessionResult:
    transcript: str
    mismatches: int
    summaries: list[EventSummary]


def _award_short(award: Award) -> str:
    if award.kind is AwardKind.TASK_XP:
        return f"+{award.value} XP"
    if award.kind is AwardKind.STREAK_BONUS:
        return f"streak +{award.value} XP"
    if award.kind is AwardKind.STREAK_BADGE or award.kind is AwardKind.QUEST_BADGE:
        return f"badge {award.value}"
    if award.kind is AwardKind.QUEST_UNLOCKED:
        return f"unlocked {award.value}"
    return f"level {award.value}"


def _describe(action: ScriptAction, issue_number: int | None) -> str:
    if action.action == "comment":
        return f'comment on #{issue_number} "{action.body}"'
    if action.action == "assign":
        who = action.assignee or "self"
        return f"assign {who} on #{issue_number}"
    if action.action == "open_pr":
        return f'open PR "{action.title}"'
    if action.action == "close_issue":
        return f"close #{issue_number}"
    return "fork the sandbox"


def simulate_session(script: SessionScript, catalog: QuestCatalog) -> SessionResult:
    """Run the whole script through the real event pipeline on a simulated
    host, returning the printable transcript."""
    host = SimulatedHost()
    with tempfile.TemporaryDirectory(prefix="ossdoorway-sim-") as tmp:
        store = FileProgressStore(tmp, catalog)
        service = OssDoorwayService(catalog, store, host)
        repo = service.enroll(script.user, contributors=script.contributors)
        view = host.repo_view(repo)

        lines = [f"== OSSDoorway simulation: {script.user} =="]
        mismatches = 0
        summaries: list[EventSummary] = []
        for index, action in enumerate(script.actions, start=1):
            issue_number = None
            if action.issue is not None:
                issue_number = (
                    view.quest_issue(action.issue)
                    if isinstance(action.issue, str)
                    else int(action.issue)
                )
                if issue_number is None:
                    raise ScriptError(f"actions[{index - 1}]: no issue for {action.issue!r}")

            if action.action == "comment":
                event = host.comment_as(script.user, repo, issue_number, action.body or "")
            elif action.action == "assign":
                event = host.assign_as(script.user, repo, issue_number, action.assignee)
            elif action.action == "open_pr":
                event = host.open_pr_as(script.user, repo, action.title or "", action.body or "")
            elif action.action == "close_issue":
                event = host.close_issue_as(script.user, repo, issue_number)
            else:
                event = host.fork_as(script.user, repo)

            summary = service.handle_event(event)
            summaries.append(summary)

            note = ""
            if action.expect is not None:
                if summary.decision == action.expect:
                    note = f" (expected {action.expect})"
                else:
                    note = f" (MISMATCH: expected {action.expect})"
                    mismatches += 1
            detail = ""
            if summary.awards:
                detail = " | " + ", ".join(_award_short(a) for a in summary.awards)
            lines.append(
                f"[{index:02d}] {_describe(action, issue_number)} -> "
                f"{summary.decision}{note}{detail}"
            )

        final_state = store.load_progress(script.user)
        assert final_state is not None
        stats = stats_snapshot(final_state, catalog)
        lines.append("")
        lines.append("== final dashboard ==")
        lines.append(render_dashboard(final_state, catalog))
        lines.append("== summary ==")
        lines.append(f"quests completed: {stats.quests_completed}/{len(catalog.quests)}")
        lines.append(f"xp: {stats.total_xp}")
        lines.append(f"level: {stats.level}")
        lines.append(f"badges: {len(stats.badges)}")
        lines.append(f"progress: {len(final_state.completed)}/{catalog.total_tasks()}")
        lines.append(f"mismatches: {mismatches}")
        transcript = "\n".join(lines) + "\n"
    return SessionResult(transcript=transcript, mismatches=mismatches, summaries=summaries)
