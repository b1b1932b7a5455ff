from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ossdoorway.events import ActivityEvent, EventKind, MalformedEvent
from ossdoorway.verification import (
    Decision,
    VerificationOutcome,
    parse_issue_links,
    parse_mentions,
    verify,
)


class StubView:
    """Minimal RepoView for predicate tests."""

    def __init__(self, contributors=(), quest_issues=None, forks=(), states=None):
        self._contributors = list(contributors)
        self._quest_issues = quest_issues or {}
        self._forks = set(forks)
        self._states = states or {}

    def fork_exists(self, actor):
        return actor in self._forks

    def issue_state(self, number):
        return self._states.get(number, "open")

    def issue_assignees(self, number):
        return []

    def contributors(self):
        return list(self._contributors)

    def quest_issue(self, quest_id):
        return self._quest_issues.get(quest_id)


def _event(kind=EventKind.ISSUE_COMMENT, **overrides) -> ActivityEvent:
    defaults = dict(
        delivery_id="d1",
        kind=kind,
        actor="alice",
        repo="sandbox/alice",
        issue_number=1,
        body="hello",
    )
    defaults.update(overrides)
    return ActivityEvent(**defaults)


def test_self_assignment_satisfied(catalog):
    task = catalog.task("quest2", "task2")
    event = _event(
        EventKind.ISSUE_ASSIGNED, assignee="alice", actor="alice", body=None
    )
    outcome = verify(task, event, StubView())
    assert outcome.decision is Decision.SATISFIED


def test_self_assignment_rejected_for_other_assignee(catalog):
    task = catalog.task("quest2", "task2")
    event = _event(EventKind.ISSUE_ASSIGNED, assignee="bob", actor="alice", body=None)
    outcome = verify(task, event, StubView())
    assert outcome.decision is Decision.REJECTED
    assert outcome.reason == "assignee is not you"


def test_kind_mismatch_is_not_applicable(catalog):
    task = catalog.task("quest2", "task2")  # wants issue_assigned
    outcome = verify(task, _event(EventKind.ISSUE_COMMENT), StubView())
    assert outcome.decision is Decision.NOT_APPLICABLE


def test_scoped_task_other_issue_not_applicable(catalog):
    task = catalog.task("quest1", "task1")  # scoped to quest1's issue
    view = StubView(quest_issues={"quest1": 1})
    ours = _event(issue_number=1, body="see /issues")
    other = _event(issue_number=9, body="see /issues")
    assert verify(task, ours, view).decision is Decision.SATISFIED
    assert verify(task, other, view).decision is Decision.NOT_APPLICABLE


def test_scoped_task_without_quest_issue_not_applicable(catalog):
    task = catalog.task("quest1", "task1")
    assert verify(task, _event(body="/issues"), StubView()).decision is (
        Decision.NOT_APPLICABLE
    )


def test_answer_pattern_case_insensitive(catalog):
    task = catalog.task("quest1", "task4")  # pattern README
    view = StubView(quest_issues={"quest1": 1})
    assert verify(task, _event(body="i read the readme!"), view).decision is (
        Decision.SATISFIED
    )
    outcome = verify(task, _event(body="i read nothing"), view)
    assert outcome.decision is Decision.REJECTED
    assert outcome.reason


def test_contains_mention_intersects_contributors(catalog):
    task = catalog.task("quest2", "task4")
    view = StubView(contributors=["carol", "dan"])
    hit = _event(body="thanks @carol", mentions=("carol",))
    miss = _event(body="thanks @eve", mentions=("eve",))
    none = _event(body="thanks all")
    assert verify(task, hit, view).decision is Decision.SATISFIED
    assert verify(task, miss, view).decision is Decision.REJECTED
    assert "@eve" in verify(task, miss, view).reason
    assert verify(task, none, view).decision is Decision.REJECTED


def test_links_issue_checks_quest_issue(catalog):
    task = catalog.task("quest3", "task1")
    view = StubView(quest_issues={"quest3": 3})
    linked = _event(
        EventKind.PULL_REQUEST_OPENED, body="Fixes #3", linked_issues=(3,)
    )
    unlinked = _event(
        EventKind.PULL_REQUEST_OPENED, body="A change", linked_issues=()
    )
    assert verify(task, linked, view).decision is Decision.SATISFIED
    outcome = verify(task, unlinked, view)
    assert outcome.decision is Decision.REJECTED
    assert "#3" in outcome.reason


def test_requests_review_pattern(catalog):
    task = catalog.task("quest3", "task2")
    view = StubView()
    assert verify(task, _event(body="please REVIEW this"), view).decision is (
        Decision.SATISFIED
    )
    assert verify(task, _event(body="all done"), view).decision is Decision.REJECTED


def test_always_predicate(catalog):
    task = catalog.task("quest3", "task3")
    event = _event(EventKind.ISSUE_CLOSED, body=None)
    assert verify(task, event, StubView()).decision is Decision.SATISFIED


def test_verify_is_pure(catalog):
    task = catalog.task("quest1", "task1")
    view = StubView(quest_issues={"quest1": 1})
    event = _event(body="/issues")
    assert verify(task, event, view) == verify(task, event, view)


def test_never_satisfied_on_kind_mismatch(catalog):
    view = StubView(quest_issues={q.id: i + 1 for i, q in enumerate(catalog.quests)})
    events = [
        _event(EventKind.ISSUE_COMMENT, body="/issues #3 review hi @carol"),
        _event(EventKind.ISSUE_ASSIGNED, assignee="alice", body=None),
        _event(EventKind.PULL_REQUEST_OPENED, linked_issues=(1, 2, 3)),
        _event(EventKind.ISSUE_CLOSED, body=None),
        _event(EventKind.FORK_CREATED, body=None, issue_number=None),
    ]
    for quest in catalog.quests:
        for task in quest.tasks:
            for event in events:
                if event.kind is not task.verification_spec.event_kind:
                    outcome = verify(task, event, view)
                    assert outcome.decision is Decision.NOT_APPLICABLE


def test_rejection_requires_reason():
    with pytest.raises(ValueError):
        VerificationOutcome(Decision.REJECTED)


def test_event_validation():
    with pytest.raises(MalformedEvent):
        _event(body=None).validate()  # comment without body
    with pytest.raises(MalformedEvent):
        _event(delivery_id="").validate()
    _event().validate()


# ---------------------------------------------------------------------------
# Parsers


def test_parse_mentions_examples():
    assert parse_mentions("thanks @carol and @carol!") == ["carol"]
    assert parse_mentions("email me at a@b.com") == []
    assert parse_mentions("") == []
    assert parse_mentions("@a-b and @-nope and @nope-") == ["a-b"]
    assert parse_mentions("@" + "x" * 40) == []
    assert parse_mentions("(@carol) @dan,@erin") == ["carol", "dan", "erin"]


def test_parse_issue_links_examples():
    assert parse_issue_links("Fixes #7") == [7]
    assert parse_issue_links("see #3, closes #3 and #10") == [3, 10]
    assert parse_issue_links("issue number 7") == []
    assert parse_issue_links("ticket a#1 and ##2 but #4 ok") == [4]
    assert parse_issue_links("resolves #05") == [5]


_WORD_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")
_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-")


def _mentions_oracle(text: str) -> list[str]:
    """Character-scan reimplementation of the documented mention grammar."""
    found: list[str] = []
    i = 0
    while i < len(text):
        if text[i] != "@":
            i += 1
            continue
        if i > 0 and (text[i - 1] in _WORD_CHARS or text[i - 1] == "@"):
            i += 1
            continue
        j = i + 1
        while j < len(text) and text[j] in _NAME_CHARS:
            j += 1
        name = text[i + 1 : j]
        if (
            name
            and len(name) <= 39
            and not name.startswith("-")
            and not name.endswith("-")
        ):
            if name not in found:
                found.append(name)
        i = j if j > i + 1 else i + 1
    return found


def _links_oracle(text: str) -> list[int]:
    found: set[int] = set()
    i = 0
    while i < len(text):
        if text[i] != "#":
            i += 1
            continue
        if i > 0 and (text[i - 1] in _WORD_CHARS or text[i - 1] == "#"):
            i += 1
            continue
        j = i + 1
        while j < len(text) and text[j].isdigit():
            j += 1
        digits = text[i + 1 : j]
        if digits and (j >= len(text) or text[j] not in _WORD_CHARS):
            found.add(int(digits))
        i = j if j > i + 1 else i + 1
    return sorted(found)


_soup = st.text(
    alphabet="ab-@#._ 19xX!\n,()" + "@#",
    max_size=60,
)


@given(_soup)
@settings(max_examples=300, deadline=None)
def test_parse_mentions_matches_oracle(text):
    assert parse_mentions(text) == _mentions_oracle(text)


@given(_soup)
@settings(max_examples=300, deadline=None)
def test_parse_issue_links_matches_oracle(text):
    assert parse_issue_links(text) == _links_oracle(text)
