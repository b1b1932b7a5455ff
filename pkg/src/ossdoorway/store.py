"""Durable progress persistence and the processed-delivery ledger.

A single-directory embedded store: one JSON document per learner under
``data_dir/progress/``, plus an append-only ``ledger`` file of processed
delivery ids. Writes go to a temp file and are renamed into place, so
readers never observe a partial document and a crash mid-write loses at
most the write in flight.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import quote, unquote

from .catalog import QuestCatalog
from .progression import CompletionRecord, ProgressState, validate_state

SCHEMA_VERSION = 1


class StorageError(Exception):
    """The backing directory failed us (I/O trouble)."""


class CorruptedDocument(StorageError):
    """A document exists but does not deserialize to a valid state."""


def state_to_document(state: ProgressState) -> dict:
    """Self-describing JSON document for one learner (sorted for stability)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "updated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "state": {
            "user": state.user,
            "completed": [[r.quest_id, r.task_id, r.timestamp] for r in state.completed],
            "xp": state.xp,
            "level": state.level,
            "badges": sorted(state.badges),
            "streak_counter": state.streak_counter,
            "attempts": sorted([q, t, n] for q, t, n in state.attempts),
            "unlocked_quests": sorted(state.unlocked_quests),
        },
    }


def state_from_document(doc: dict) -> ProgressState:
    try:
        if doc["schema_version"] != SCHEMA_VERSION:
            raise CorruptedDocument(
                f"unrecognized schema_version {doc['schema_version']!r}"
            )
        raw = doc["state"]
        return ProgressState(
            user=raw["user"],
            completed=tuple(CompletionRecord(q, t, ts) for q, t, ts in raw["completed"]),
            xp=int(raw["xp"]),
            level=int(raw["level"]),
            badges=frozenset(raw["badges"]),
            streak_counter=int(raw["streak_counter"]),
            attempts=tuple((q, t, int(n)) for q, t, n in raw["attempts"]),
            unlocked_quests=frozenset(raw["unlocked_quests"]),
        )
    except CorruptedDocument:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptedDocument(f"document shape invalid: {exc}") from exc


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class FileProgressStore:
    """Progress documents plus the delivery ledger, on local disk.

    When constructed with a catalog, loaded and saved states are checked
    against the full set of state invariants; corruption is reported
    distinctly from absence.
    """

    def __init__(self, data_dir: str | Path, catalog: QuestCatalog | None = None):
        self.data_dir = Path(data_dir)
        self.catalog = catalog
        self._progress_dir = self.data_dir / "progress"
        self._ledger_path = self.data_dir / "ledger"
        try:
            self._progress_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create data dir {self.data_dir}: {exc}") from exc
        self._lock = threading.Lock()
        self._seen_deliveries = self._load_ledger()

    # -- progress documents --------------------------------------------------

    def _user_path(self, user: str) -> Path:
        return self._progress_dir / (quote(user, safe="") + ".json")

    def load_progress(self, user: str) -> ProgressState | None:
        path = self._user_path(user)
        if not path.exists():
            return None
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptedDocument(f"cannot read document for {user!r}: {exc}") from exc
        state = state_from_document(doc)
        if state.user != user:
            raise CorruptedDocument(
                f"document for {user!r} claims to belong to {state.user!r}"
            )
        if self.catalog is not None:
            try:
                validate_state(state, self.catalog)
            except (ValueError, KeyError) as exc:
                raise CorruptedDocument(f"state invariants violated: {exc}") from exc
        return state

    def save_progress(self, user: str, state: ProgressState) -> None:
        if state.user != user:
            raise ValueError(f"state belongs to {state.user!r}, not {user!r}")
        if self.catalog is not None:
            validate_state(state, self.catalog)  # reject before touching storage
        document = json.dumps(state_to_document(state), indent=2, sort_keys=True)
        try:
            _atomic_write(self._user_path(user), document)
        except OSError as exc:
            raise StorageError(f"cannot persist progress for {user!r}: {exc}") from exc

    def users(self) -> list[str]:
        return sorted(
            unquote(p.name[: -len(".json")])
            for p in self._progress_dir.glob("*.json")
        )

    # -- delivery ledger -----------------------------------------------------

    def _load_ledger(self) -> set[str]:
        seen: set[str] = set()
        if self._ledger_path.exists():
            for line in self._ledger_path.read_text(encoding="utf-8").splitlines():
                if line:
                    seen.add(unquote(line.split("\t", 1)[0]))
        return seen

    def record_delivery(self, delivery_id: str) -> bool:
        """Atomic check-and-set: True exactly once per distinct id (fresh),
        False ever after (duplicate)."""
        if not delivery_id:
            raise ValueError("delivery_id must be non-empty")
        with self._lock:
            if delivery_id in self._seen_deliveries:
                return False
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            line = f"{quote(delivery_id, safe='')}\t{stamp}\n"
            try:
                with open(self._ledger_path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"cannot append to delivery ledger: {exc}") from exc
            self._seen_deliveries.add(delivery_id)
            return True

    def seen_delivery(self, delivery_id: str) -> bool:
        with self._lock:
            return delivery_id in self._seen_deliveries
