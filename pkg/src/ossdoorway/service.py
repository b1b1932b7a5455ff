"""Wires catalog, progression, verification, rendering, store, and hosting
into the event-processing pipeline.

Per-learner ordering is the one concurrency invariant that matters: every
event for a given learner is handled strictly in arrival order (the
dispatcher partitions by actor), while different learners proceed in
parallel. State is saved before any outbound call, so a failed comment or
dashboard publish never loses progress.
"""

from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass
from typing import Any

import yaml

from .catalog import QuestCatalog, Task, load_catalog_file, default_catalog
from .events import ActivityEvent
from .gateway import HostingClient, HostingError, publish_dashboard
from .progression import (
    Award,
    ProgressState,
    apply_completion,
    current_objective,
    new_state,
    record_failure,
)
from .renderer import render_dashboard, render_feedback, render_quest_issue
from .store import FileProgressStore
from .verification import Decision, VerificationOutcome, rejected, verify

log = logging.getLogger("ossdoorway.service")


class ConfigError(ValueError):
    """Service configuration is unusable."""


@dataclass(frozen=True)
class ServiceConfig:
    catalog_path: str | None = None  # None: shipped default curriculum
    data_dir: str = "./data"
    listen_address: str = "127.0.0.1:8420"
    webhook_secret_env: str = "WEBHOOK_SECRET"
    hosting_mode: str = "simulated"  # "simulated" | "live"
    hosting_base_url: str = "https://api.github.com"
    hosting_token_env: str = "HOSTING_TOKEN"
    log_level: str = "INFO"

    @property
    def host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rsplit(":", 1)[1])


def load_service_config(path: str) -> ServiceConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh.read()) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config top level must be a mapping")
    hosting = doc.get("hosting", {})
    if not isinstance(hosting, dict):
        raise ConfigError("hosting section must be a mapping")
    config = ServiceConfig(
        catalog_path=doc.get("catalog"),
        data_dir=str(doc.get("data_dir", "./data")),
        listen_address=str(doc.get("listen", "127.0.0.1:8420")),
        webhook_secret_env=str(doc.get("webhook_secret_env", "WEBHOOK_SECRET")),
        hosting_mode=str(hosting.get("mode", "simulated")),
        hosting_base_url=str(hosting.get("base_url", "https://api.github.com")),
        hosting_token_env=str(hosting.get("token_env", "HOSTING_TOKEN")),
        log_level=str(doc.get("log_level", "INFO")),
    )
    if config.hosting_mode not in ("simulated", "live"):
        raise ConfigError(f"hosting.mode must be simulated or live, got {config.hosting_mode!r}")
    try:
        config.port
    except (ValueError, IndexError):
        raise ConfigError(f"listen address {config.listen_address!r} is not host:port") from None
    return config


def load_configured_catalog(config: ServiceConfig) -> QuestCatalog:
    if config.catalog_path is None:
        return default_catalog()
    return load_catalog_file(config.catalog_path)


def sandbox_repo_for(user: str) -> str:
    return f"sandbox/{user}"


@dataclass(frozen=True)
class EventSummary:
    """What one delivery did, for transcripts and logs."""

    delivery_id: str
    user: str
    decision: str  # satisfied | rejected | not_applicable | duplicate
    quest_id: str | None = None
    task_id: str | None = None
    awards: tuple[Award, ...] = ()
    feedback: str | None = None
    dashboard_published: bool = False


class OssDoorwayService:
    """The bot's brain: one instance per process, stateless between events
    apart from the store."""

    def __init__(
        self,
        catalog: QuestCatalog,
        store: FileProgressStore,
        client: HostingClient,
    ):
        self.catalog = catalog
        self.store = store
        self.client = client

    # -- enrollment ----------------------------------------------------------

    def enroll(self, user: str, contributors: tuple[str, ...] = ("carol", "dan")) -> str:
        """Create the learner's sandbox (simulated mode), post one issue per
        quest, publish the fresh dashboard, and persist the initial state.

        Returns the sandbox repo name. In live mode the repo must already
        exist (created from the course template); only issues and the
        dashboard are created there.
        """
        repo = sandbox_repo_for(user)
        creator = getattr(self.client, "create_repo", None)
        if creator is not None and repo not in getattr(self.client, "repos", {}):
            creator(repo, contributors=contributors)
        for index, quest in enumerate(self.catalog.quests, start=1):
            view = self.client.repo_view(repo)
            if view.quest_issue(quest.id) is None:
                self.client.create_issue(
                    repo,
                    f"Quest {index}: {quest.title}",
                    render_quest_issue(quest, index),
                )
        state = self.store.load_progress(user)
        if state is None:
            state = new_state(user, self.catalog)
            self.store.save_progress(user, state)
        publish_dashboard(self.client, repo, render_dashboard(state, self.catalog))
        return repo

    # -- event pipeline -------------------------------------------------------

    def handle_event(self, event: ActivityEvent) -> EventSummary:
        """Process one normalized event end to end.

        Duplicate deliveries are dropped before anything else runs. Outbound
        failures are logged, never raised: progress is already saved by the
        time the first outbound call happens.
        """
        if not self.store.record_delivery(event.delivery_id):
            return EventSummary(event.delivery_id, event.actor, "duplicate")

        user = event.actor
        state = self.store.load_progress(user)
        if state is None:
            state = new_state(user, self.catalog)

        objective = current_objective(state, self.catalog)
        if objective is None:
            # Curriculum finished; nothing left to verify.
            return EventSummary(event.delivery_id, user, "not_applicable")
        quest_id, task_id = objective
        task = self.catalog.task(quest_id, task_id)

        view = self.client.repo_view(event.repo)
        outcome = verify(task, event, view)
        if outcome.decision is Decision.NOT_APPLICABLE:
            outcome = self._reroute_future_match(state, task, event, view)
        if outcome.decision is Decision.NOT_APPLICABLE:
            return EventSummary(
                event.delivery_id, user, "not_applicable", quest_id, task_id
            )

        if outcome.decision is Decision.SATISFIED:
            state, awards = apply_completion(
                state, self.catalog, quest_id, task_id, event.timestamp or ""
            )
            self.store.save_progress(user, state)
            next_objective = current_objective(state, self.catalog)
            next_task = (
                self.catalog.task(*next_objective) if next_objective else None
            )
            feedback = render_feedback(outcome, awards, next_task, self.catalog)
            published = self._respond(event, feedback, state)
            return EventSummary(
                event.delivery_id,
                user,
                "satisfied",
                quest_id,
                task_id,
                awards=tuple(awards),
                feedback=feedback,
                dashboard_published=published,
            )

        state = record_failure(state, self.catalog, quest_id, task_id)
        self.store.save_progress(user, state)
        feedback = render_feedback(outcome, [], task, self.catalog)
        published = self._respond(event, feedback, state)
        return EventSummary(
            event.delivery_id,
            user,
            "rejected",
            quest_id,
            task_id,
            feedback=feedback,
            dashboard_published=published,
        )

    def _reroute_future_match(
        self,
        state: ProgressState,
        current_task: Task,
        event: ActivityEvent,
        view: Any,
    ) -> VerificationOutcome:
        """An event that would satisfy a later task is rejected with a hint
        naming the task the learner should be on; anything else stays
        not-applicable."""
        seen_current = False
        for quest in self.catalog.quests:
            for task in quest.tasks:
                if task.quest_id == current_task.quest_id and task.id == current_task.id:
                    seen_current = True
                    continue
                if not seen_current or state.is_completed(quest.id, task.id):
                    continue
                if verify(task, event, view).decision is Decision.SATISFIED:
                    return rejected(
                        f'that looks like the later task "{task.title}" — '
                        f'your current task is "{current_task.title}"'
                    )
        return VerificationOutcome(Decision.NOT_APPLICABLE)

    def _respond(self, event: ActivityEvent, feedback: str, state: ProgressState) -> bool:
        """Post feedback and republish the dashboard; failures only log."""
        repo = event.repo
        if event.issue_number is not None:
            try:
                self.client.post_comment(repo, event.issue_number, feedback)
            except HostingError as exc:
                log.error("feedback comment failed for %s: %s", state.user, exc)
        try:
            publish_dashboard(self.client, repo, render_dashboard(state, self.catalog))
            return True
        except HostingError as exc:
            log.error("dashboard publish failed for %s: %s", state.user, exc)
            return False


class EventDispatcher:
    """Bounded queues between the webhook endpoint and a worker pool.

    Events are partitioned by actor so one learner's events run strictly in
    order on a single worker, while different learners proceed in parallel.
    """

    def __init__(self, service: OssDoorwayService, workers: int = 4, queue_size: int = 256):
        self.service = service
        self._queues: list[queue.Queue] = [queue.Queue(maxsize=queue_size) for _ in range(workers)]
        self._threads = [
            threading.Thread(target=self._run, args=(q,), daemon=True, name=f"ossdoorway-worker-{i}")
            for i, q in enumerate(self._queues)
        ]
        self.processed = 0
        self._processed_lock = threading.Lock()
        for thread in self._threads:
            thread.start()

    def submit(self, event: ActivityEvent) -> None:
        index = hash(event.actor) % len(self._queues)
        self._queues[index].put(event)

    def _run(self, events: queue.Queue) -> None:
        while True:
            event = events.get()
            if event is None:
                events.task_done()
                return
            try:
                self.service.handle_event(event)
            except Exception:  # noqa: BLE001 -- a poison event must not kill the worker
                log.exception("event %s failed", event.delivery_id)
            finally:
                with self._processed_lock:
                    self.processed += 1
                events.task_done()

    def drain(self) -> None:
        """Process everything already enqueued, then stop the workers."""
        for q in self._queues:
            q.put(None)
        for thread in self._threads:
            thread.join()
