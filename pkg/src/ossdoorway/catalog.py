"""Quest/task catalog: declarative curriculum definition, loading, validation.

The catalog is loaded once from a YAML config file and is immutable
afterwards, so it can be shared freely across concurrent event handlers.
The shipped default config reproduces the published three-quest curriculum
(12 tasks) with tier-based XP rewards.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Any

import yaml

from .events import EventKind


class DifficultyTier(Enum):
    EXPLORATION = "exploration"
    INTERACTION = "interaction"
    CONTRIBUTION = "contribution"


class PredicateKind(Enum):
    """How a matching event is judged against a task."""

    ANSWER_PATTERN = "answer_pattern"
    SELF_ASSIGNMENT = "self_assignment"
    CONTAINS_MENTION = "contains_mention"
    LINKS_ISSUE = "links_issue"
    REQUESTS_REVIEW = "requests_review"
    ALWAYS = "always"


# Which event kinds each predicate can meaningfully inspect.
PREDICATE_EVENT_KINDS: dict[PredicateKind, frozenset[EventKind]] = {
    PredicateKind.ANSWER_PATTERN: frozenset(
        {EventKind.ISSUE_COMMENT, EventKind.PULL_REQUEST_OPENED}
    ),
    PredicateKind.SELF_ASSIGNMENT: frozenset({EventKind.ISSUE_ASSIGNED}),
    PredicateKind.CONTAINS_MENTION: frozenset({EventKind.ISSUE_COMMENT}),
    PredicateKind.LINKS_ISSUE: frozenset({EventKind.PULL_REQUEST_OPENED}),
    PredicateKind.REQUESTS_REVIEW: frozenset({EventKind.ISSUE_COMMENT}),
    PredicateKind.ALWAYS: frozenset(EventKind),
}

# Patterned predicates must carry a regex; REQUESTS_REVIEW falls back to this.
DEFAULT_REVIEW_PATTERN = r"\breview\b"

DEFAULT_TIER_XP: dict[DifficultyTier, int] = {
    DifficultyTier.EXPLORATION: 10,
    DifficultyTier.INTERACTION: 20,
    DifficultyTier.CONTRIBUTION: 40,
}

DEFAULT_LEVEL_THRESHOLDS = (0, 50, 130, 250)
DEFAULT_STREAK_LENGTH = 3
DEFAULT_STREAK_BONUS_XP = 15


class CatalogError(ValueError):
    """Catalog config rejected; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class CatalogParseError(CatalogError):
    """The config text is not even well-formed YAML / the wrong shape."""


@dataclass(frozen=True)
class BadgeDef:
    id: str
    name: str
    icon: str


@dataclass(frozen=True)
class VerificationSpec:
    event_kind: EventKind
    predicate: PredicateKind
    pattern: str | None = None
    quest_issue_scoped: bool = False

    def effective_pattern(self) -> str | None:
        if self.predicate is PredicateKind.REQUESTS_REVIEW:
            return self.pattern or DEFAULT_REVIEW_PATTERN
        return self.pattern


@dataclass(frozen=True)
class Task:
    id: str
    quest_id: str
    title: str
    instructions: str
    difficulty_tier: DifficultyTier
    verification_spec: VerificationSpec
    xp_reward: int


@dataclass(frozen=True)
class Quest:
    id: str
    title: str
    goal: str
    tasks: tuple[Task, ...]
    completion_badge: BadgeDef


@dataclass(frozen=True)
class QuestCatalog:
    quests: tuple[Quest, ...]
    level_thresholds: tuple[int, ...]
    streak_length: int
    streak_bonus_xp: int
    streak_badge: BadgeDef
    sequential_tasks: bool = True

    def quest(self, quest_id: str) -> Quest:
        for quest in self.quests:
            if quest.id == quest_id:
                return quest
        raise UnknownQuest(quest_id)

    def task(self, quest_id: str, task_id: str) -> Task:
        for task in self.quest(quest_id).tasks:
            if task.id == task_id:
                return task
        raise UnknownTask(quest_id, task_id)

    def total_tasks(self) -> int:
        return sum(len(q.tasks) for q in self.quests)

    def badges(self) -> tuple[BadgeDef, ...]:
        """All badge definitions, in stable catalog order (quests, then streak)."""
        return tuple(q.completion_badge for q in self.quests) + (self.streak_badge,)

    def badge(self, badge_id: str) -> BadgeDef:
        for badge in self.badges():
            if badge.id == badge_id:
                return badge
        raise KeyError(badge_id)


class UnknownQuest(KeyError):
    def __init__(self, quest_id: str):
        self.quest_id = quest_id
        super().__init__(f"unknown quest: {quest_id!r}")


class UnknownTask(KeyError):
    def __init__(self, quest_id: str, task_id: str):
        self.quest_id = quest_id
        self.task_id = task_id
        super().__init__(f"unknown task: {quest_id!r}/{task_id!r}")


def task_at(catalog: QuestCatalog, quest_id: str, index: int) -> Task:
    """Task at ordered position ``index`` within a quest."""
    tasks = catalog.quest(quest_id).tasks
    if not 0 <= index < len(tasks):
        raise IndexError(
            f"task index {index} out of range for quest {quest_id!r} "
            f"({len(tasks)} tasks)"
        )
    return tasks[index]


# ---------------------------------------------------------------------------
# Loading


def load_catalog(config_text: str) -> QuestCatalog:
    """Parse and validate a YAML quest config into an immutable catalog.

    Raises :class:`CatalogParseError` for malformed text and
    :class:`CatalogError` (with a path to the offending field) for any
    invariant violation.
    """
    try:
        doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise CatalogParseError("<config>", f"invalid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise CatalogParseError("<config>", "top level must be a mapping")
    return _catalog_from_doc(doc)


def load_catalog_file(path: str) -> QuestCatalog:
    with open(path, encoding="utf-8") as fh:
        return load_catalog(fh.read())


def default_catalog() -> QuestCatalog:
    """The shipped curriculum: 3 quests, 12 tasks, tier rewards 10/20/40."""
    text = resources.files("ossdoorway.data").joinpath("default_quests.yaml").read_text(
        encoding="utf-8"
    )
    return load_catalog(text)


def _require(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise CatalogError(f"{path}.{key}", "missing required field")
    return doc[key]


def _string(value: Any, path: str, *, allow_empty: bool = False) -> str:
    if not isinstance(value, str):
        raise CatalogError(path, f"expected a string, got {type(value).__name__}")
    if not allow_empty and not value.strip():
        raise CatalogError(path, "must be non-empty")
    return value


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CatalogError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _enum(cls: type, value: Any, path: str):
    try:
        return cls(value)
    except ValueError:
        options = ", ".join(member.value for member in cls)
        raise CatalogError(path, f"must be one of: {options}") from None


def _badge_from_doc(doc: Any, path: str) -> BadgeDef:
    if not isinstance(doc, dict):
        raise CatalogError(path, "expected a mapping with id/name/icon")
    return BadgeDef(
        id=_string(_require(doc, "id", path), f"{path}.id"),
        name=_string(_require(doc, "name", path), f"{path}.name"),
        icon=_string(_require(doc, "icon", path), f"{path}.icon"),
    )


def _verify_from_doc(doc: Any, path: str) -> VerificationSpec:
    if not isinstance(doc, dict):
        raise CatalogError(path, "expected a mapping with event/predicate")
    kind = _enum(EventKind, _require(doc, "event", path), f"{path}.event")
    predicate = _enum(PredicateKind, _require(doc, "predicate", path), f"{path}.predicate")
    pattern = doc.get("pattern")
    if pattern is not None:
        pattern = _string(pattern, f"{path}.pattern")
    scoped = doc.get("scoped", False)
    if not isinstance(scoped, bool):
        raise CatalogError(f"{path}.scoped", "expected a boolean")
    spec = VerificationSpec(
        event_kind=kind, predicate=predicate, pattern=pattern, quest_issue_scoped=scoped
    )
    _validate_spec(spec, path)
    return spec


def _validate_spec(spec: VerificationSpec, path: str) -> None:
    if spec.event_kind not in PREDICATE_EVENT_KINDS[spec.predicate]:
        raise CatalogError(
            f"{path}.predicate",
            f"{spec.predicate.value} is not compatible with event "
            f"{spec.event_kind.value}",
        )
    if spec.predicate is PredicateKind.ANSWER_PATTERN and spec.pattern is None:
        raise CatalogError(f"{path}.pattern", "answer_pattern requires a pattern")
    pattern = spec.effective_pattern()
    if pattern is not None:
        try:
            re.compile(pattern, re.IGNORECASE)
        except re.error as exc:
            raise CatalogError(f"{path}.pattern", f"regex does not compile: {exc}") from None


def _task_from_doc(
    doc: Any, quest_id: str, path: str, tier_xp: dict[DifficultyTier, int]
) -> Task:
    if not isinstance(doc, dict):
        raise CatalogError(path, "expected a task mapping")
    tier = _enum(DifficultyTier, _require(doc, "tier", path), f"{path}.tier")
    if "xp" in doc:
        xp = _integer(doc["xp"], f"{path}.xp")
    else:
        xp = tier_xp[tier]
    if xp <= 0:
        raise CatalogError(f"{path}.xp", "xp reward must be positive")
    return Task(
        id=_string(_require(doc, "id", path), f"{path}.id"),
        quest_id=quest_id,
        title=_string(_require(doc, "title", path), f"{path}.title"),
        instructions=_string(_require(doc, "instructions", path), f"{path}.instructions"),
        difficulty_tier=tier,
        verification_spec=_verify_from_doc(_require(doc, "verify", path), f"{path}.verify"),
        xp_reward=xp,
    )


def _catalog_from_doc(doc: dict) -> QuestCatalog:
    rewards = doc.get("rewards", {})
    if not isinstance(rewards, dict):
        raise CatalogError("rewards", "expected a mapping")

    tier_xp = dict(DEFAULT_TIER_XP)
    for tier_key, value in (rewards.get("tier_xp") or {}).items():
        tier = _enum(DifficultyTier, tier_key, "rewards.tier_xp")
        amount = _integer(value, f"rewards.tier_xp.{tier_key}")
        if amount <= 0:
            raise CatalogError(f"rewards.tier_xp.{tier_key}", "must be positive")
        tier_xp[tier] = amount

    raw_thresholds = rewards.get("level_thresholds", list(DEFAULT_LEVEL_THRESHOLDS))
    if not isinstance(raw_thresholds, list) or not raw_thresholds:
        raise CatalogError("rewards.level_thresholds", "expected a non-empty list")
    thresholds = tuple(
        _integer(v, f"rewards.level_thresholds[{i}]") for i, v in enumerate(raw_thresholds)
    )
    if thresholds[0] != 0:
        raise CatalogError("rewards.level_thresholds", "first threshold must be 0")
    for i in range(1, len(thresholds)):
        if thresholds[i] <= thresholds[i - 1]:
            raise CatalogError("rewards.level_thresholds", "must be strictly ascending")

    streak = rewards.get("streak", {})
    if not isinstance(streak, dict):
        raise CatalogError("rewards.streak", "expected a mapping")
    streak_length = _integer(streak.get("length", DEFAULT_STREAK_LENGTH), "rewards.streak.length")
    if streak_length < 2:
        raise CatalogError("rewards.streak.length", "must be at least 2")
    streak_bonus = _integer(
        streak.get("bonus_xp", DEFAULT_STREAK_BONUS_XP), "rewards.streak.bonus_xp"
    )
    if streak_bonus < 0:
        raise CatalogError("rewards.streak.bonus_xp", "must be non-negative")
    if "badge" in streak:
        streak_badge = _badge_from_doc(streak["badge"], "rewards.streak.badge")
    else:
        streak_badge = BadgeDef(id="streak-first", name="On Fire", icon="🔥")

    sequential = doc.get("sequential_tasks", True)
    if not isinstance(sequential, bool):
        raise CatalogError("sequential_tasks", "expected a boolean")

    raw_quests = doc.get("quests")
    if not isinstance(raw_quests, list) or not raw_quests:
        raise CatalogError("quests", "at least one quest is required")

    quests: list[Quest] = []
    for qi, qdoc in enumerate(raw_quests):
        qpath = f"quests[{qi}]"
        if not isinstance(qdoc, dict):
            raise CatalogError(qpath, "expected a quest mapping")
        quest_id = _string(_require(qdoc, "id", qpath), f"{qpath}.id")
        raw_tasks = _require(qdoc, "tasks", qpath)
        if not isinstance(raw_tasks, list) or not raw_tasks:
            raise CatalogError(f"{qpath}.tasks", "at least one task is required")
        tasks = tuple(
            _task_from_doc(tdoc, quest_id, f"{qpath}.tasks[{ti}]", tier_xp)
            for ti, tdoc in enumerate(raw_tasks)
        )
        seen_tasks: set[str] = set()
        for ti, task in enumerate(tasks):
            if task.id in seen_tasks:
                raise CatalogError(f"{qpath}.tasks[{ti}].id", f"duplicate task id {task.id!r}")
            seen_tasks.add(task.id)
        quests.append(
            Quest(
                id=quest_id,
                title=_string(_require(qdoc, "title", qpath), f"{qpath}.title"),
                goal=_string(_require(qdoc, "goal", qpath), f"{qpath}.goal"),
                tasks=tasks,
                completion_badge=_badge_from_doc(_require(qdoc, "badge", qpath), f"{qpath}.badge"),
            )
        )

    seen_quests: set[str] = set()
    for qi, quest in enumerate(quests):
        if quest.id in seen_quests:
            raise CatalogError(f"quests[{qi}].id", f"duplicate quest id {quest.id!r}")
        seen_quests.add(quest.id)

    catalog = QuestCatalog(
        quests=tuple(quests),
        level_thresholds=thresholds,
        streak_length=streak_length,
        streak_bonus_xp=streak_bonus,
        streak_badge=streak_badge,
        sequential_tasks=sequential,
    )

    seen_badges: set[str] = set()
    for badge in catalog.badges():
        if badge.id in seen_badges:
            raise CatalogError("badges", f"duplicate badge id {badge.id!r}")
        seen_badges.add(badge.id)

    return catalog


# ---------------------------------------------------------------------------
# Dumping (canonical form: explicit per-task XP, no tier_xp section)


def dump_catalog(catalog: QuestCatalog) -> str:
    """Serialize a catalog to config text that round-trips through load_catalog."""
    doc: dict[str, Any] = {
        "rewards": {
            "level_thresholds": list(catalog.level_thresholds),
            "streak": {
                "length": catalog.streak_length,
                "bonus_xp": catalog.streak_bonus_xp,
                "badge": _badge_doc(catalog.streak_badge),
            },
        },
        "sequential_tasks": catalog.sequential_tasks,
        "quests": [
            {
                "id": quest.id,
                "title": quest.title,
                "goal": quest.goal,
                "badge": _badge_doc(quest.completion_badge),
                "tasks": [_task_doc(task) for task in quest.tasks],
            }
            for quest in catalog.quests
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


def _badge_doc(badge: BadgeDef) -> dict[str, str]:
    return {"id": badge.id, "name": badge.name, "icon": badge.icon}


def _task_doc(task: Task) -> dict[str, Any]:
    verify: dict[str, Any] = {
        "event": task.verification_spec.event_kind.value,
        "predicate": task.verification_spec.predicate.value,
    }
    if task.verification_spec.pattern is not None:
        verify["pattern"] = task.verification_spec.pattern
    if task.verification_spec.quest_issue_scoped:
        verify["scoped"] = True
    return {
        "id": task.id,
        "title": task.title,
        "instructions": task.instructions,
        "tier": task.difficulty_tier.value,
        "xp": task.xp_reward,
        "verify": verify,
    }
