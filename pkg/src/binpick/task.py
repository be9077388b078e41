"""Episode lifecycle state machine, completion timing, and the top-5 board.

Episodes move Init -> InProgress -> Complete/Abort -> Reset; a reset re-seeds
and regenerates the scene, returning to Init. Completion requires every
spawned trash object deposited; the completion time is the world clock at the
final deposit. Leaderboards are kept per difficulty (Easy and Hard times are
not comparable) and persisted atomically after every mutation.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

RESET_DELAY_S = 3.0
LEADERBOARD_SIZE = 5


class EpisodePhase(str, Enum):
    INIT = "init"
    IN_PROGRESS = "in_progress"
    COMPLETE = "complete"
    ABORT = "abort"
    RESET = "reset"


class FsmEvent(str, Enum):
    SCENE_READY = "scene_ready"
    GOAL_REACHED_ALL = "goal_reached_all"
    USER_ABORT = "user_abort"
    RESET_ELAPSED = "reset_elapsed"


class IllegalTransition(RuntimeError):
    def __init__(self, phase: EpisodePhase, event: FsmEvent):
        super().__init__(f"event '{event.value}' is illegal in phase '{phase.value}'")
        self.phase = phase
        self.event = event


_TRANSITIONS = {
    (EpisodePhase.INIT, FsmEvent.SCENE_READY): EpisodePhase.IN_PROGRESS,
    (EpisodePhase.IN_PROGRESS, FsmEvent.GOAL_REACHED_ALL): EpisodePhase.COMPLETE,
    (EpisodePhase.IN_PROGRESS, FsmEvent.USER_ABORT): EpisodePhase.ABORT,
    (EpisodePhase.COMPLETE, FsmEvent.RESET_ELAPSED): EpisodePhase.RESET,
    (EpisodePhase.ABORT, FsmEvent.RESET_ELAPSED): EpisodePhase.RESET,
}


def fsm_step(phase: EpisodePhase, event: FsmEvent) -> EpisodePhase:
    """Advance the episode FSM; raises IllegalTransition, leaving phase unchanged."""
    key = (phase, event)
    if key not in _TRANSITIONS:
        raise IllegalTransition(phase, event)
    return _TRANSITIONS[key]


@dataclass(frozen=True)
class EpisodeRecord:
    episode_id: str
    difficulty: str
    seed: int
    success: bool
    frame_count: int
    completion_time_s: float | None = None

    def __post_init__(self):
        if self.success != (self.completion_time_s is not None):
            raise ValueError("completion time must be present iff the episode succeeded")


@dataclass
class GoalProgress:
    episode_complete: bool
    completion_time_s: float | None = None
    reset_at_s: float | None = None


class EpisodeTracker:
    """Per-episode bookkeeping: phase, deposits, completion time, reset timer.

    completion_mode "all" (default) requires every spawned trash object
    deposited; "first" completes on the first deposit.
    """

    def __init__(self, total_trash: int, reset_delay_s: float = RESET_DELAY_S,
                 completion_mode: str = "all"):
        if total_trash < 1:
            raise ValueError("an episode needs at least one trash object")
        if completion_mode not in ("all", "first"):
            raise ValueError("completion_mode must be 'all' or 'first'")
        self.phase = EpisodePhase.INIT
        self.total_trash = total_trash
        self.deposited = 0
        self.completion_time_s: float | None = None
        self.reset_at_s: float | None = None
        self.reset_delay_s = reset_delay_s
        self.completion_mode = completion_mode

    def apply(self, event: FsmEvent) -> EpisodePhase:
        self.phase = fsm_step(self.phase, event)
        return self.phase

    @property
    def _needed(self) -> int:
        return 1 if self.completion_mode == "first" else self.total_trash

    def on_goal_progress(self, newly_deposited: list[str], clock_s: float) -> GoalProgress:
        """Register deposits; completes the episode when enough trash is in."""
        if self.phase is not EpisodePhase.IN_PROGRESS:
            raise IllegalTransition(self.phase, FsmEvent.GOAL_REACHED_ALL)
        self.deposited += len(newly_deposited)
        if self.deposited < self._needed or not newly_deposited:
            return GoalProgress(episode_complete=False)
        self.completion_time_s = clock_s
        self.reset_at_s = clock_s + self.reset_delay_s
        self.apply(FsmEvent.GOAL_REACHED_ALL)
        return GoalProgress(True, self.completion_time_s, self.reset_at_s)

    def abort(self, clock_s: float) -> None:
        self.apply(FsmEvent.USER_ABORT)
        self.reset_at_s = clock_s + self.reset_delay_s


@dataclass(frozen=True)
class LeaderboardEntry:
    player: str
    time_s: float
    episode_id: str
    difficulty: str

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "time_s": self.time_s,
            "episode_id": self.episode_id,
            "difficulty": self.difficulty,
        }


class Leaderboard:
    """Top-5 fastest completions for one difficulty, persisted as a JSON array."""

    def __init__(self, path: str | Path, difficulty: str,
                 size: int = LEADERBOARD_SIZE):
        self.path = Path(path)
        self.difficulty = difficulty
        self.size = size
        self.entries: list[LeaderboardEntry] = []
        if self.path.exists():
            data = json.loads(self.path.read_text())
            self.entries = [
                LeaderboardEntry(e["player"], e["time_s"], e["episode_id"], e["difficulty"])
                for e in data
            ]
            self.entries.sort(key=lambda e: e.time_s)

    def insert(self, entry: LeaderboardEntry) -> int | None:
        """Insert-sort the entry; returns its 1-based rank or None if not top-5.

        Persistence is atomic (temp file + rename); on failure the in-memory
        board is left unchanged and the error propagates.
        """
        candidate = sorted(self.entries + [entry], key=lambda e: e.time_s)[: self.size]
        if entry not in candidate:
            return None
        previous = self.entries
        self.entries = candidate
        try:
            self._persist()
        except Exception:
            self.entries = previous
            raise
        return candidate.index(entry) + 1

    def _persist(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps([e.to_dict() for e in self.entries], indent=2) + "\n"
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".leaderboard-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(payload)
            os.replace(tmp, self.path)
        except Exception:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def leaderboard_path(data_dir: str | Path, difficulty: str) -> Path:
    return Path(data_dir) / f"leaderboard_{difficulty}.json"
