"""Pure game-state engine: XP, levels, badges, streaks, quest gating.

All operations take an immutable :class:`ProgressState` and return a new
one; callers are expected to serialize operations per learner (the service
layer does). Nothing here touches the clock, the filesystem, or the network.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

from .catalog import Quest, QuestCatalog, Task


class AwardKind(Enum):
    TASK_XP = "task_xp"
    LEVEL_UP = "level_up"
    QUEST_BADGE = "quest_badge"
    STREAK_BONUS = "streak_bonus"
    STREAK_BADGE = "streak_badge"
    QUEST_UNLOCKED = "quest_unlocked"


# Kinds whose value is an XP amount (must be positive).
_XP_KINDS = frozenset({AwardKind.TASK_XP, AwardKind.STREAK_BONUS})


@dataclass(frozen=True)
class Award:
    """One reward event: an XP amount, a new level, or a badge/quest id."""

    kind: AwardKind
    value: int | str

    def __post_init__(self) -> None:
        if self.kind in _XP_KINDS and (not isinstance(self.value, int) or self.value <= 0):
            raise ValueError(f"{self.kind.value} award must carry a positive XP amount")


@dataclass(frozen=True)
class CompletionRecord:
    quest_id: str
    task_id: str
    timestamp: str


@dataclass(frozen=True)
class ProgressState:
    """One learner's full game state. Treat as immutable."""

    user: str
    completed: tuple[CompletionRecord, ...] = ()
    xp: int = 0
    level: int = 1
    badges: frozenset[str] = frozenset()
    streak_counter: int = 0
    attempts: tuple[tuple[str, str, int], ...] = ()  # (quest_id, task_id, failures)
    unlocked_quests: frozenset[str] = frozenset()

    def is_completed(self, quest_id: str, task_id: str) -> bool:
        return any(r.quest_id == quest_id and r.task_id == task_id for r in self.completed)

    def attempt_count(self, quest_id: str, task_id: str) -> int:
        for q, t, n in self.attempts:
            if q == quest_id and t == task_id:
                return n
        return 0


@dataclass(frozen=True)
class Stats:
    quests_completed: int
    total_xp: int
    level: int
    progress_fraction: Fraction
    badges: tuple[str, ...]


class AlreadyCompleted(Exception):
    def __init__(self, quest_id: str, task_id: str):
        super().__init__(f"task {quest_id}/{task_id} is already completed")


class TaskLocked(Exception):
    def __init__(self, quest_id: str, task_id: str, why: str):
        self.why = why
        super().__init__(f"task {quest_id}/{task_id} is locked: {why}")


def new_state(user: str, catalog: QuestCatalog) -> ProgressState:
    """Fresh state: no XP, level 1, only the first quest unlocked."""
    return ProgressState(user=user, unlocked_quests=frozenset({catalog.quests[0].id}))


def level_for_xp(xp: int, thresholds: tuple[int, ...]) -> int:
    """Largest level whose threshold is <= xp (thresholds[0] is level 1)."""
    level = 1
    for threshold in thresholds[1:]:
        if xp >= threshold:
            level += 1
    return level


def _check_unlocked(state: ProgressState, catalog: QuestCatalog, task: Task) -> None:
    if task.quest_id not in state.unlocked_quests:
        raise TaskLocked(task.quest_id, task.id, "quest not unlocked yet")
    if catalog.sequential_tasks:
        for prior in catalog.quest(task.quest_id).tasks:
            if prior.id == task.id:
                break
            if not state.is_completed(task.quest_id, prior.id):
                raise TaskLocked(
                    task.quest_id, task.id, f"previous task {prior.id} is incomplete"
                )


def _quest_completed(state: ProgressState, quest: Quest) -> bool:
    return all(state.is_completed(quest.id, task.id) for task in quest.tasks)


def apply_completion(
    state: ProgressState,
    catalog: QuestCatalog,
    quest_id: str,
    task_id: str,
    timestamp: str,
) -> tuple[ProgressState, list[Award]]:
    """Record a verified completion, returning the new state and its awards.

    Award order: task XP, streak bonus/badge, quest badge + next-quest
    unlock, then one level-up per threshold crossed.
    """
    task = catalog.task(quest_id, task_id)
    if state.is_completed(quest_id, task_id):
        raise AlreadyCompleted(quest_id, task_id)
    _check_unlocked(state, catalog, task)

    awards: list[Award] = [Award(AwardKind.TASK_XP, task.xp_reward)]
    xp = state.xp + task.xp_reward
    streak = state.streak_counter + 1
    badges = set(state.badges)

    if streak % catalog.streak_length == 0:
        if catalog.streak_bonus_xp > 0:
            awards.append(Award(AwardKind.STREAK_BONUS, catalog.streak_bonus_xp))
            xp += catalog.streak_bonus_xp
        if catalog.streak_badge.id not in badges:
            badges.add(catalog.streak_badge.id)
            awards.append(Award(AwardKind.STREAK_BADGE, catalog.streak_badge.id))

    completed = state.completed + (CompletionRecord(quest_id, task_id, timestamp),)
    unlocked = set(state.unlocked_quests)

    quest = catalog.quest(quest_id)
    interim = replace(state, completed=completed)
    if _quest_completed(interim, quest):
        badges.add(quest.completion_badge.id)
        awards.append(Award(AwardKind.QUEST_BADGE, quest.completion_badge.id))
        quest_ids = [q.id for q in catalog.quests]
        next_index = quest_ids.index(quest_id) + 1
        if next_index < len(quest_ids):
            next_id = quest_ids[next_index]
            if next_id not in unlocked:
                unlocked.add(next_id)
                awards.append(Award(AwardKind.QUEST_UNLOCKED, next_id))

    new_level = level_for_xp(xp, catalog.level_thresholds)
    for reached in range(state.level + 1, new_level + 1):
        awards.append(Award(AwardKind.LEVEL_UP, reached))

    next_state = replace(
        state,
        completed=completed,
        xp=xp,
        level=new_level,
        badges=frozenset(badges),
        streak_counter=streak,
        unlocked_quests=frozenset(unlocked),
    )
    return next_state, awards


def record_failure(
    state: ProgressState, catalog: QuestCatalog, quest_id: str, task_id: str
) -> ProgressState:
    """A rejected attempt: streak resets, attempt counter bumps, XP untouched."""
    task = catalog.task(quest_id, task_id)
    _check_unlocked(state, catalog, task)
    bumped = False
    attempts: list[tuple[str, str, int]] = []
    for q, t, n in state.attempts:
        if q == quest_id and t == task_id:
            attempts.append((q, t, n + 1))
            bumped = True
        else:
            attempts.append((q, t, n))
    if not bumped:
        attempts.append((quest_id, task_id, 1))
    return replace(state, streak_counter=0, attempts=tuple(attempts))


def current_objective(state: ProgressState, catalog: QuestCatalog) -> tuple[str, str] | None:
    """First unlocked, uncompleted task in catalog order; None when all done."""
    for quest in catalog.quests:
        if quest.id not in state.unlocked_quests:
            continue
        for task in quest.tasks:
            if not state.is_completed(quest.id, task.id):
                return quest.id, task.id
    return None


def stats_snapshot(state: ProgressState, catalog: QuestCatalog) -> Stats:
    quests_done = sum(1 for quest in catalog.quests if _quest_completed(state, quest))
    badges = tuple(b.id for b in catalog.badges() if b.id in state.badges)
    return Stats(
        quests_completed=quests_done,
        total_xp=state.xp,
        level=state.level,
        progress_fraction=Fraction(len(state.completed), catalog.total_tasks()),
        badges=badges,
    )


def validate_state(state: ProgressState, catalog: QuestCatalog) -> None:
    """Raise ValueError when a state breaks an invariant for this catalog.

    Used by the store as its corruption check before trusting a document.
    """
    if state.xp < 0:
        raise ValueError("xp must be non-negative")
    if state.streak_counter < 0:
        raise ValueError("streak_counter must be non-negative")
    if state.streak_counter > len(state.completed):
        raise ValueError("streak_counter exceeds total completions")
    if state.level != level_for_xp(state.xp, catalog.level_thresholds):
        raise ValueError("level is inconsistent with xp")
    seen: set[tuple[str, str]] = set()
    for record in state.completed:
        key = (record.quest_id, record.task_id)
        if key in seen:
            raise ValueError(f"duplicate completion for {key}")
        seen.add(key)
        catalog.task(record.quest_id, record.task_id)  # raises on unknown ids
    for quest in catalog.quests:
        has_badge = quest.completion_badge.id in state.badges
        if has_badge != _quest_completed(state, quest):
            raise ValueError(f"quest badge inconsistent for {quest.id}")
    for quest_id in state.unlocked_quests:
        catalog.quest(quest_id)
    for q, t, n in state.attempts:
        if n < 0:
            raise ValueError("attempt counters must be non-negative")
        catalog.task(q, t)
