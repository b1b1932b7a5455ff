"""Normalized repository activity events.

Every inbound webhook delivery (or simulated learner action) is reduced to an
:class:`ActivityEvent` before any game logic sees it, so the rest of the
system never touches raw payloads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class EventKind(Enum):
    """The five repository event types the bot subscribes to."""

    ISSUE_COMMENT = "issue_comment"
    ISSUE_ASSIGNED = "issue_assigned"
    PULL_REQUEST_OPENED = "pull_request_opened"
    ISSUE_CLOSED = "issue_closed"
    FORK_CREATED = "fork_created"


class MalformedEvent(ValueError):
    """An event is missing a field its kind requires."""


# Fields that must be present per kind, beyond delivery_id/actor/repo.
_REQUIRED_FIELDS: dict[EventKind, tuple[str, ...]] = {
    EventKind.ISSUE_COMMENT: ("body", "issue_number"),
    EventKind.ISSUE_ASSIGNED: ("assignee", "issue_number"),
    EventKind.PULL_REQUEST_OPENED: (),
    EventKind.ISSUE_CLOSED: ("issue_number",),
    EventKind.FORK_CREATED: (),
}


@dataclass(frozen=True)
class ActivityEvent:
    """One normalized repository event.

    ``delivery_id`` is globally unique and drives exactly-once processing.
    ``mentions`` and ``linked_issues`` are pre-parsed from whatever text the
    raw payload carried; they are empty when no text was present.
    """

    delivery_id: str
    kind: EventKind
    actor: str
    repo: str
    issue_number: int | None = None
    body: str | None = None
    assignee: str | None = None
    mentions: tuple[str, ...] = ()
    linked_issues: tuple[int, ...] = ()
    timestamp: str | None = None

    def validate(self) -> None:
        """Raise :class:`MalformedEvent` unless kind-specific fields are set."""
        if not self.delivery_id:
            raise MalformedEvent("delivery_id must be non-empty")
        if not self.actor:
            raise MalformedEvent("actor must be non-empty")
        if not self.repo:
            raise MalformedEvent("repo must be non-empty")
        for name in _REQUIRED_FIELDS[self.kind]:
            if getattr(self, name) is None:
                raise MalformedEvent(f"{self.kind.value} event requires {name}")
