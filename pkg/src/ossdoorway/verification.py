"""Decides whether a repository event satisfies a task's verification spec.

Everything here is pure: a failed check is a value (``Rejected`` with a
reason, or ``NotApplicable``), never an exception, so the event pipeline can
treat verification as a total function.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

from .catalog import PredicateKind, Task
from .events import ActivityEvent


class RepoView(Protocol):
    """Read-only queries against the learner's sandbox repository.

    Backs the predicates that events alone cannot settle (live contributor
    lists, quest-issue lookup). Implementations must be side-effect free.
    """

    def fork_exists(self, actor: str) -> bool: ...

    def issue_state(self, number: int) -> str: ...

    def issue_assignees(self, number: int) -> list[str]: ...

    def contributors(self) -> list[str]: ...

    def quest_issue(self, quest_id: str) -> int | None: ...


class Decision(Enum):
    SATISFIED = "satisfied"
    REJECTED = "rejected"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class VerificationOutcome:
    decision: Decision
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.decision is Decision.REJECTED and not self.reason:
            raise ValueError("a rejection must carry a reason")


SATISFIED = VerificationOutcome(Decision.SATISFIED)
NOT_APPLICABLE = VerificationOutcome(Decision.NOT_APPLICABLE)


def rejected(reason: str) -> VerificationOutcome:
    return VerificationOutcome(Decision.REJECTED, reason)


def verify(task: Task, event: ActivityEvent, view: RepoView) -> VerificationOutcome:
    """Match one event against one task.

    Returns ``NOT_APPLICABLE`` when the event is simply not about this task
    (wrong kind, or wrong issue for quest-issue-scoped tasks); ``Rejected``
    when the event is an attempt that does not meet the bar.
    """
    spec = task.verification_spec
    event.validate()

    if event.kind is not spec.event_kind:
        return NOT_APPLICABLE
    if spec.quest_issue_scoped:
        expected = view.quest_issue(task.quest_id)
        if expected is None or event.issue_number != expected:
            return NOT_APPLICABLE

    if spec.predicate is PredicateKind.ALWAYS:
        return SATISFIED

    if spec.predicate is PredicateKind.SELF_ASSIGNMENT:
        if event.assignee == event.actor:
            return SATISFIED
        return rejected("assignee is not you")

    if spec.predicate is PredicateKind.CONTAINS_MENTION:
        known = set(view.contributors())
        if any(handle in known for handle in event.mentions):
            return SATISFIED
        if event.mentions:
            listed = ", ".join(f"@{m}" for m in event.mentions)
            return rejected(f"{listed} is not in the project's contributor list")
        return rejected("no @-mention of a project contributor found")

    if spec.predicate is PredicateKind.LINKS_ISSUE:
        expected = view.quest_issue(task.quest_id)
        if expected is not None and expected in event.linked_issues:
            return SATISFIED
        return rejected(
            "the pull request does not reference this quest's issue"
            + (f" (#{expected})" if expected is not None else "")
        )

    # ANSWER_PATTERN and REQUESTS_REVIEW: regex over the raw text.
    pattern = spec.effective_pattern()
    assert pattern is not None  # enforced by catalog validation
    if event.body and re.search(pattern, event.body, re.IGNORECASE):
        return SATISFIED
    if spec.predicate is PredicateKind.REQUESTS_REVIEW:
        return rejected("the comment does not ask for a review")
    return rejected("the answer does not contain what this task asks for")


# ---------------------------------------------------------------------------
# Text parsers

# Platform username grammar: alphanumeric and hyphen, no leading/trailing
# hyphen, at most 39 chars. A '@' directly after a word character (as in an
# e-mail address) is not a mention, and a candidate run that breaks the
# grammar (too long, hyphen at an end) is no mention at all, not a shorter
# one.
_MENTION_CANDIDATE_RE = re.compile(r"(?<![\w@])@([A-Za-z0-9-]+)")

# '#N' must not ride inside a word ("a#1" and "#12abc" are not references).
_ISSUE_REF_RE = re.compile(r"(?<![\w#])#(\d+)(?!\w)")


def parse_mentions(body: str) -> list[str]:
    """@-handles in first-occurrence order, deduplicated, '@' stripped."""
    seen: list[str] = []
    for match in _MENTION_CANDIDATE_RE.finditer(body):
        handle = match.group(1)
        if len(handle) > 39 or handle.startswith("-") or handle.endswith("-"):
            continue
        if handle not in seen:
            seen.append(handle)
    return seen


def parse_issue_links(text: str) -> list[int]:
    """Issue numbers referenced as ``#N`` (including fixes/closes/resolves
    forms), deduplicated and ascending."""
    return sorted({int(m.group(1)) for m in _ISSUE_REF_RE.finditer(text)})
