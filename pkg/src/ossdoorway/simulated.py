"""Complete in-memory stand-in for the hosting platform.

Implements the full :class:`~ossdoorway.gateway.HostingClient` surface plus
learner-action methods (`comment_as`, `assign_as`, ...). Every learner action
builds the same payload document a real webhook would carry and runs it
through :func:`~ossdoorway.gateway.normalize_event`, so simulated events are
indistinguishable from normalized live ones by construction.

Timestamps come from a logical clock, never the wall clock, so whole
sessions replay byte-identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .events import ActivityEvent
from .gateway import HostingClient, PermissionFailure, normalize_event


@dataclass
class SimIssue:
    number: int
    title: str
    body: str
    state: str = "open"
    assignees: list[str] = field(default_factory=list)
    comments: list[tuple[str, str]] = field(default_factory=list)  # (author, body)


@dataclass
class SimPullRequest:
    number: int
    title: str
    body: str
    author: str
    state: str = "open"
    comments: list[tuple[str, str]] = field(default_factory=list)  # (author, body)


@dataclass
class SimRepo:
    full_name: str
    files: dict[str, str] = field(default_factory=dict)
    issues: dict[int, SimIssue] = field(default_factory=dict)
    pull_requests: dict[int, SimPullRequest] = field(default_factory=dict)
    forks: list[str] = field(default_factory=list)
    contributors: list[str] = field(default_factory=list)
    next_number: int = 1

    def take_number(self) -> int:
        # Issues and PRs share one number sequence, as on the real platform.
        number = self.next_number
        self.next_number += 1
        return number


class SimulatedHost(HostingClient):
    """In-memory repos plus an event sink of normalized learner actions."""

    def __init__(self) -> None:
        self.repos: dict[str, SimRepo] = {}
        self.events: list[ActivityEvent] = []
        self._deliveries = 0
        self._clock = 0
        # Test hooks: raise on the next N writes.
        self.fail_writes_with: Exception | None = None
        self.fail_writes_remaining = 0

    # -- fixture / bookkeeping helpers -------------------------------------

    def create_repo(self, full_name: str, contributors: tuple[str, ...] = ()) -> SimRepo:
        if full_name in self.repos:
            raise ValueError(f"repo {full_name!r} already exists")
        repo = SimRepo(full_name=full_name, contributors=list(contributors))
        self.repos[full_name] = repo
        return repo

    def repo(self, full_name: str) -> SimRepo:
        try:
            return self.repos[full_name]
        except KeyError:
            raise PermissionFailure(f"no such repo: {full_name}") from None

    def drain_events(self) -> list[ActivityEvent]:
        events, self.events = self.events, []
        return events

    def _next_delivery(self) -> str:
        self._deliveries += 1
        return f"sim-{self._deliveries:06d}"

    def _tick(self) -> str:
        self._clock += 1
        return f"2000-01-01T00:{self._clock // 60:02d}:{self._clock % 60:02d}Z"

    def _emit(self, event_name: str, payload: dict) -> ActivityEvent:
        event = normalize_event(event_name, self._next_delivery(), payload)
        assert event is not None, "simulated actions always map to supported events"
        self.events.append(event)
        return event

    def _check_write_ok(self) -> None:
        if self.fail_writes_remaining > 0 and self.fail_writes_with is not None:
            self.fail_writes_remaining -= 1
            raise self.fail_writes_with

    # -- HostingClient ------------------------------------------------------

    def put_file(self, repo: str, path: str, content: str, message: str) -> None:
        self._check_write_ok()
        self.repo(repo).files[path] = content

    def post_comment(self, repo: str, issue_number: int, markdown: str) -> None:
        # PRs share the issue numbering and comment endpoint on the platform.
        self._check_write_ok()
        target = self.repo(repo)
        if issue_number in target.pull_requests:
            target.pull_requests[issue_number].comments.append(("ossdoorway-bot", markdown))
            return
        issue = self._issue(repo, issue_number)
        issue.comments.append(("ossdoorway-bot", markdown))

    def create_issue(self, repo: str, title: str, body: str) -> int:
        self._check_write_ok()
        target = self.repo(repo)
        number = target.take_number()
        target.issues[number] = SimIssue(number=number, title=title, body=body)
        return number

    def repo_view(self, repo: str) -> "SimRepoView":
        return SimRepoView(self.repo(repo))

    def _issue(self, repo: str, number: int) -> SimIssue:
        target = self.repo(repo)
        if number not in target.issues:
            raise PermissionFailure(f"no issue #{number} in {repo}")
        return target.issues[number]

    # -- learner actions (each mutates state and emits a normalized event) --

    def comment_as(self, user: str, repo: str, issue_number: int, body: str) -> ActivityEvent:
        issue = self._issue(repo, issue_number)
        issue.comments.append((user, body))
        return self._emit(
            "issue_comment",
            {
                "action": "created",
                "comment": {
                    "body": body,
                    "user": {"login": user},
                    "created_at": self._tick(),
                },
                "issue": {"number": issue_number},
                "repository": {"full_name": repo},
                "sender": {"login": user},
            },
        )

    def assign_as(
        self, user: str, repo: str, issue_number: int, assignee: str | None = None
    ) -> ActivityEvent:
        issue = self._issue(repo, issue_number)
        who = assignee or user
        if who not in issue.assignees:
            issue.assignees.append(who)
        return self._emit(
            "issues",
            {
                "action": "assigned",
                "issue": {"number": issue_number, "updated_at": self._tick()},
                "assignee": {"login": who},
                "repository": {"full_name": repo},
                "sender": {"login": user},
            },
        )

    def open_pr_as(self, user: str, repo: str, title: str, body: str) -> ActivityEvent:
        target = self.repo(repo)
        number = target.take_number()
        target.pull_requests[number] = SimPullRequest(
            number=number, title=title, body=body, author=user
        )
        return self._emit(
            "pull_request",
            {
                "action": "opened",
                "pull_request": {
                    "number": number,
                    "title": title,
                    "body": body,
                    "user": {"login": user},
                    "created_at": self._tick(),
                },
                "repository": {"full_name": repo},
                "sender": {"login": user},
            },
        )

    def close_issue_as(self, user: str, repo: str, issue_number: int) -> ActivityEvent:
        issue = self._issue(repo, issue_number)
        issue.state = "closed"
        return self._emit(
            "issues",
            {
                "action": "closed",
                "issue": {"number": issue_number, "closed_at": self._tick()},
                "repository": {"full_name": repo},
                "sender": {"login": user},
            },
        )

    def fork_as(self, user: str, repo: str) -> ActivityEvent:
        target = self.repo(repo)
        if user not in target.forks:
            target.forks.append(user)
        return self._emit(
            "fork",
            {
                "forkee": {
                    "full_name": f"{user}/{repo.split('/', 1)[-1]}",
                    "owner": {"login": user},
                    "created_at": self._tick(),
                },
                "repository": {"full_name": repo},
                "sender": {"login": user},
            },
        )


class SimRepoView:
    """Read-only queries over one simulated repo."""

    def __init__(self, repo: SimRepo):
        self._repo = repo

    def fork_exists(self, actor: str) -> bool:
        return actor in self._repo.forks

    def issue_state(self, number: int) -> str:
        issue = self._repo.issues.get(number)
        return issue.state if issue else "open"

    def issue_assignees(self, number: int) -> list[str]:
        issue = self._repo.issues.get(number)
        return list(issue.assignees) if issue else []

    def contributors(self) -> list[str]:
        return list(self._repo.contributors)

    def quest_issue(self, quest_id: str) -> int | None:
        anchor = f"<!-- ossdoorway:quest:{quest_id} -->"
        for issue in self._repo.issues.values():
            if anchor in issue.body:
                return issue.number
        return None
