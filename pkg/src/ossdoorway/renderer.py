"""Markdown rendering: the README dashboard and per-event bot feedback.

Output is a pure function of its inputs — no clocks, no locale, no
set-iteration order — so identical states render byte-identically on every
platform. The HTML-comment anchors (``<!-- ossdoorway:stats -->`` etc.) are
a stable contract: tests and downstream tools locate sections through them.
"""

from __future__ import annotations

from fractions import Fraction

from .catalog import Quest, QuestCatalog, Task
from .progression import Award, AwardKind, ProgressState, current_objective, stats_snapshot
from .verification import Decision, VerificationOutcome

BAR_WIDTH = 20
_FILLED = "█"
_EMPTY = "░"

_GLYPH_DONE = "✅"
_GLYPH_CURRENT = "🔸"
_GLYPH_LOCKED = "🔒"


def _round_half_up(fraction: Fraction, scale: int) -> int:
    # floor(fraction*scale + 1/2), exactly, without touching floats
    return (2 * fraction.numerator * scale + fraction.denominator) // (
        2 * fraction.denominator
    )


def progress_bar(fraction: Fraction) -> str:
    filled = _round_half_up(fraction, BAR_WIDTH)
    percent = _round_half_up(fraction, 100)
    return f"`{_FILLED * filled}{_EMPTY * (BAR_WIDTH - filled)}` {percent}%"


def render_dashboard(state: ProgressState, catalog: QuestCatalog) -> str:
    stats = stats_snapshot(state, catalog)
    objective = current_objective(state, catalog)

    lines: list[str] = []
    lines.append("<!-- ossdoorway:header -->")
    lines.append(f"# OSSDoorway — @{state.user}")
    lines.append("")
    lines.append("Your guided path into open source, one quest at a time.")
    lines.append("")

    lines.append("<!-- ossdoorway:stats -->")
    lines.append("## Stats")
    lines.append("")
    lines.append("| Quests completed | XP | Level |")
    lines.append("| ---: | ---: | ---: |")
    lines.append(
        f"| {stats.quests_completed}/{len(catalog.quests)} "
        f"| {stats.total_xp} | {stats.level} |"
    )
    lines.append("")

    lines.append("<!-- ossdoorway:progress -->")
    lines.append("## Progress")
    lines.append("")
    lines.append(progress_bar(stats.progress_fraction))
    lines.append("")

    lines.append("<!-- ossdoorway:map -->")
    lines.append("## Map")
    lines.append("")
    lines.append(_render_map(state, catalog, objective))
    lines.append("")

    lines.append("<!-- ossdoorway:tasks -->")
    lines.append("## Tasks")
    for index, quest in enumerate(catalog.quests, start=1):
        lines.append("")
        if quest.id in state.unlocked_quests:
            lines.append(f"### Quest {index}: {quest.title}")
            lines.append(f"_Goal: {quest.goal}_")
            lines.append("")
            for task in quest.tasks:
                mark = "x" if state.is_completed(quest.id, task.id) else " "
                lines.append(f"- [{mark}] {task.title}")
        else:
            lines.append(f"### Quest {index}: {quest.title} {_GLYPH_LOCKED}")
            lines.append("_Locked — finish the quest before it to reveal these tasks._")

    lines.append("")
    lines.append("<!-- ossdoorway:badges -->")
    lines.append("## Badges")
    lines.append("")
    earned = [b for b in catalog.badges() if b.id in state.badges]
    if earned:
        for badge in earned:
            lines.append(f"- {badge.icon} {badge.name}")
    else:
        lines.append("_No badges yet — complete a quest to earn your first._")
    lines.append("")

    lines.append("<!-- ossdoorway:streak -->")
    lines.append("## Streak")
    lines.append("")
    lines.append(
        f"🔥 Current streak: **{state.streak_counter}** "
        f"(every {catalog.streak_length} tasks in a row earn "
        f"+{catalog.streak_bonus_xp} XP)"
    )
    lines.append("")
    return "\n".join(lines)


def _render_map(
    state: ProgressState, catalog: QuestCatalog, objective: tuple[str, str] | None
) -> str:
    nodes: list[str] = []
    for quest in catalog.quests:
        if all(state.is_completed(quest.id, t.id) for t in quest.tasks):
            glyph = _GLYPH_DONE
        elif quest.id in state.unlocked_quests:
            glyph = _GLYPH_CURRENT
        else:
            glyph = _GLYPH_LOCKED
        nodes.append(f"{glyph} {quest.title}")
    return " ── ".join(nodes)


_AWARD_ICONS = {
    AwardKind.TASK_XP: "✨",
    AwardKind.STREAK_BONUS: "🔥",
    AwardKind.QUEST_BADGE: "🏅",
    AwardKind.STREAK_BADGE: "🏅",
    AwardKind.QUEST_UNLOCKED: "🔓",
    AwardKind.LEVEL_UP: "⬆️",
}


def _award_line(award: Award, catalog: QuestCatalog) -> str:
    icon = _AWARD_ICONS[award.kind]
    if award.kind is AwardKind.TASK_XP:
        return f"- {icon} +{award.value} XP"
    if award.kind is AwardKind.STREAK_BONUS:
        return f"- {icon} Streak bonus: +{award.value} XP"
    if award.kind in (AwardKind.QUEST_BADGE, AwardKind.STREAK_BADGE):
        badge = catalog.badge(str(award.value))
        return f"- {icon} Badge earned: {badge.icon} {badge.name}"
    if award.kind is AwardKind.QUEST_UNLOCKED:
        quest = catalog.quest(str(award.value))
        return f"- {icon} Quest unlocked: {quest.title}"
    return f"- {icon} Level up! You reached level {award.value}"


def render_feedback(
    outcome: VerificationOutcome,
    awards: list[Award],
    next_task: Task | None,
    catalog: QuestCatalog,
) -> str:
    """Bot reply for one verified event. Never returns an empty string."""
    if outcome.decision is Decision.SATISFIED:
        lines = ["🎉 **Task complete!**", ""]
        lines.extend(_award_line(award, catalog) for award in awards)
        lines.append("")
        if next_task is None:
            lines.append("🏆 **All quests complete — congratulations, contributor!**")
        else:
            lines.append(f"**Next up:** {next_task.title}")
        return "\n".join(lines)

    if outcome.decision is Decision.REJECTED:
        lines = [f"❌ Not quite: {outcome.reason}", ""]
        lines.append(
            "Don't worry — nothing is lost except your streak. Read the task "
            "instructions again and give it another try."
        )
        if next_task is not None:
            lines.append("")
            lines.append(f"**Current task:** {next_task.title}")
        return "\n".join(lines)

    return "Nothing to verify for this event."


def render_quest_issue(quest: Quest, index: int) -> str:
    """Issue body posted at enrollment; carries the quest anchor the
    verifier resolves quest-issue scoping through."""
    lines = [
        f"<!-- ossdoorway:quest:{quest.id} -->",
        f"# Quest {index}: {quest.title}",
        "",
        f"_Goal: {quest.goal}_",
        "",
        "Work through the tasks in order — the bot replies here after every "
        "attempt, and your README shows your progress.",
    ]
    for ti, task in enumerate(quest.tasks, start=1):
        lines.append("")
        lines.append(f"## Task {ti}: {task.title}")
        lines.append("")
        lines.append(task.instructions.strip())
    return "\n".join(lines)
