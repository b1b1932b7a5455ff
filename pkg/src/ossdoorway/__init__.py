"""OSSDoorway: a gamified scaffolding bot for first open-source contributions.

Learners work through a catalog of quests in a sandbox repository; the bot
verifies each task from webhook events, awards XP, levels, badges, and
streaks, and keeps a markdown dashboard in the repo's README. A companion
analytics module evaluates pre/post self-efficacy questionnaires with
nonparametric statistics.
"""

__version__ = "0.1.0"

from .catalog import QuestCatalog, default_catalog, load_catalog  # noqa: F401
from .events import ActivityEvent, EventKind  # noqa: F401
from .progression import ProgressState, new_state  # noqa: F401
