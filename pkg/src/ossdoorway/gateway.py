"""Boundary to the code-hosting platform.

Inbound: webhook signature verification and raw-payload normalization into
:class:`~ossdoorway.events.ActivityEvent`. Outbound: the abstract
:class:`HostingClient` the rest of the system is written against, plus the
real HTTP implementation. The in-memory test double lives in
:mod:`ossdoorway.simulated`.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import time
from abc import ABC, abstractmethod
from typing import Any, Callable

import requests

from .events import ActivityEvent, EventKind
from .verification import RepoView, parse_issue_links, parse_mentions

README_PATH = "README.md"


# ---------------------------------------------------------------------------
# Inbound: signatures and normalization


def verify_signature(secret: bytes, body: bytes, signature_header: str) -> bool:
    """Check an HMAC-SHA256 webhook signature ("sha256=<hex>").

    Malformed headers return False; the digest comparison is constant-time.
    """
    if not isinstance(signature_header, str) or not signature_header.startswith("sha256="):
        return False
    provided = signature_header[len("sha256=") :]
    expected = hmac.new(secret, body, hashlib.sha256).hexdigest()
    return hmac.compare_digest(expected, provided)


class MalformedPayload(ValueError):
    """A supported webhook event is missing required payload fields."""


def _dig(payload: dict, *path: str) -> Any:
    node: Any = payload
    for key in path:
        if not isinstance(node, dict) or key not in node or node[key] is None:
            raise MalformedPayload(f"missing field: {'.'.join(path)}")
        node = node[key]
    return node


def _opt(payload: dict, *path: str) -> Any:
    node: Any = payload
    for key in path:
        if not isinstance(node, dict) or node.get(key) is None:
            return None
        node = node[key]
    return node


def normalize_event(
    event_name: str, delivery_id: str, payload: dict
) -> ActivityEvent | None:
    """Map a raw webhook document to an ActivityEvent.

    Returns None for event types (or actions) outside the supported set;
    raises :class:`MalformedPayload` when a supported event lacks required
    fields. Optional fields stay None unless the payload carries them.
    """
    action = payload.get("action")

    if event_name == "issue_comment" and action == "created":
        body = str(_dig(payload, "comment", "body"))
        return ActivityEvent(
            delivery_id=delivery_id,
            kind=EventKind.ISSUE_COMMENT,
            actor=str(_dig(payload, "comment", "user", "login")),
            repo=str(_dig(payload, "repository", "full_name")),
            issue_number=int(_dig(payload, "issue", "number")),
            body=body,
            mentions=tuple(parse_mentions(body)),
            linked_issues=tuple(parse_issue_links(body)),
            timestamp=_opt(payload, "comment", "created_at"),
        )

    if event_name == "issues" and action == "assigned":
        return ActivityEvent(
            delivery_id=delivery_id,
            kind=EventKind.ISSUE_ASSIGNED,
            actor=str(_dig(payload, "sender", "login")),
            repo=str(_dig(payload, "repository", "full_name")),
            issue_number=int(_dig(payload, "issue", "number")),
            assignee=str(_dig(payload, "assignee", "login")),
            timestamp=_opt(payload, "issue", "updated_at"),
        )

    if event_name == "issues" and action == "closed":
        return ActivityEvent(
            delivery_id=delivery_id,
            kind=EventKind.ISSUE_CLOSED,
            actor=str(_dig(payload, "sender", "login")),
            repo=str(_dig(payload, "repository", "full_name")),
            issue_number=int(_dig(payload, "issue", "number")),
            timestamp=_opt(payload, "issue", "closed_at"),
        )

    if event_name == "pull_request" and action == "opened":
        title = _opt(payload, "pull_request", "title") or ""
        body = _opt(payload, "pull_request", "body")
        link_text = f"{title}\n{body or ''}"
        return ActivityEvent(
            delivery_id=delivery_id,
            kind=EventKind.PULL_REQUEST_OPENED,
            actor=str(_dig(payload, "pull_request", "user", "login")),
            repo=str(_dig(payload, "repository", "full_name")),
            issue_number=int(_dig(payload, "pull_request", "number")),
            body=body,
            mentions=tuple(parse_mentions(body)) if body else (),
            linked_issues=tuple(parse_issue_links(link_text)),
            timestamp=_opt(payload, "pull_request", "created_at"),
        )

    if event_name == "fork":
        return ActivityEvent(
            delivery_id=delivery_id,
            kind=EventKind.FORK_CREATED,
            actor=str(_dig(payload, "sender", "login")),
            repo=str(_dig(payload, "repository", "full_name")),
            timestamp=_opt(payload, "forkee", "created_at"),
        )

    return None


# ---------------------------------------------------------------------------
# Outbound: hosting client


class HostingError(Exception):
    """Base for outbound hosting failures."""


class TransportFailure(HostingError):
    """Retryable: network trouble or a 5xx from the platform."""


class PermissionFailure(HostingError):
    """Terminal: authentication/authorization/not-found; retrying won't help."""


class HostingClient(ABC):
    """Outbound operations the bot needs from the hosting platform."""

    @abstractmethod
    def put_file(self, repo: str, path: str, content: str, message: str) -> None:
        """Create or overwrite a file (last writer wins)."""

    @abstractmethod
    def post_comment(self, repo: str, issue_number: int, markdown: str) -> None: ...

    @abstractmethod
    def create_issue(self, repo: str, title: str, body: str) -> int:
        """Open an issue, returning its number (used at enrollment)."""

    @abstractmethod
    def repo_view(self, repo: str) -> RepoView: ...


def publish_dashboard(client: HostingClient, repo: str, markdown: str) -> None:
    """Write the dashboard markdown to the repo's README.

    Raises TransportFailure (retryable) or PermissionFailure (terminal)
    unchanged from the client.
    """
    if not markdown:
        raise ValueError("dashboard markdown must be non-empty")
    client.put_file(repo, README_PATH, markdown, "Update progress dashboard")


# ---------------------------------------------------------------------------
# Real HTTP client (REST surface of the hosting platform)


class HttpHostingClient(HostingClient):
    """Talks to the platform's REST API.

    Retryable transport failures are retried up to ``max_retries`` times with
    exponential backoff starting at 1s; 4xx responses surface immediately as
    PermissionFailure. ``session`` and ``sleep`` are injectable for tests.
    """

    def __init__(
        self,
        base_url: str,
        token: str,
        session: requests.Session | None = None,
        max_retries: int = 3,
        backoff_start: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.session.headers.update(
            {
                "Authorization": f"Bearer {token}",
                "Accept": "application/vnd.github+json",
                "User-Agent": "ossdoorway-bot",
            }
        )
        self.max_retries = max_retries
        self.backoff_start = backoff_start
        self._sleep = sleep

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        url = f"{self.base_url}{path}"
        delay = self.backoff_start
        attempt = 0
        while True:
            attempt += 1
            try:
                response = self.session.request(method, url, timeout=30, **kwargs)
            except requests.RequestException as exc:
                if attempt > self.max_retries:
                    raise TransportFailure(f"{method} {path}: {exc}") from exc
                self._sleep(delay)
                delay *= 2
                continue
            if response.status_code >= 500:
                if attempt > self.max_retries:
                    raise TransportFailure(
                        f"{method} {path}: server error {response.status_code}"
                    )
                self._sleep(delay)
                delay *= 2
                continue
            if response.status_code >= 400:
                raise PermissionFailure(
                    f"{method} {path}: {response.status_code} {response.text[:200]}"
                )
            return response

    def put_file(self, repo: str, path: str, content: str, message: str) -> None:
        # The contents API needs the current blob sha to overwrite.
        sha = None
        try:
            existing = self._request("GET", f"/repos/{repo}/contents/{path}")
            sha = existing.json().get("sha")
        except PermissionFailure:
            pass  # 404: file does not exist yet
        payload: dict[str, Any] = {
            "message": message,
            "content": base64.b64encode(content.encode("utf-8")).decode("ascii"),
        }
        if sha:
            payload["sha"] = sha
        self._request("PUT", f"/repos/{repo}/contents/{path}", json=payload)

    def post_comment(self, repo: str, issue_number: int, markdown: str) -> None:
        self._request(
            "POST", f"/repos/{repo}/issues/{issue_number}/comments", json={"body": markdown}
        )

    def create_issue(self, repo: str, title: str, body: str) -> int:
        response = self._request(
            "POST", f"/repos/{repo}/issues", json={"title": title, "body": body}
        )
        return int(response.json()["number"])

    def repo_view(self, repo: str) -> RepoView:
        return _HttpRepoView(self, repo)


class _HttpRepoView:
    """RepoView over the REST API; every query is a fresh read."""

    def __init__(self, client: HttpHostingClient, repo: str):
        self._client = client
        self._repo = repo

    def fork_exists(self, actor: str) -> bool:
        forks = self._client._request("GET", f"/repos/{self._repo}/forks").json()
        return any(_opt(f, "owner", "login") == actor for f in forks)

    def issue_state(self, number: int) -> str:
        issue = self._client._request("GET", f"/repos/{self._repo}/issues/{number}").json()
        return str(issue.get("state", "open"))

    def issue_assignees(self, number: int) -> list[str]:
        issue = self._client._request("GET", f"/repos/{self._repo}/issues/{number}").json()
        return [a["login"] for a in issue.get("assignees", []) if a.get("login")]

    def contributors(self) -> list[str]:
        people = self._client._request("GET", f"/repos/{self._repo}/contributors").json()
        return [p["login"] for p in people if p.get("login")]

    def quest_issue(self, quest_id: str) -> int | None:
        issues = self._client._request(
            "GET", f"/repos/{self._repo}/issues", params={"state": "all"}
        ).json()
        anchor = f"<!-- ossdoorway:quest:{quest_id} -->"
        for issue in issues:
            if anchor in (issue.get("body") or ""):
                return int(issue["number"])
        return None
