"""One simulation session: scene, world, control pipeline, episode lifecycle.

A session is a deterministic function of (seed, difficulty, input timeline):
each tick consumes exactly one sticky input snapshot, advances the control
stack and the world by one fixed dt, and evaluates goals. The applied-input
timeline is recorded as (tick, input) pairs, so any episode can be replayed
bit-identically, which is also how the service's replay endpoint works.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import world as worldmod
from .control import (
    ChassisCommand,
    ClutchState,
    ControlInput,
    HandInput,
    IKTarget,
    SmoothingFilter,
    clamp_box_for,
    gait_targets,
    map_chassis,
    solve_arm_ik,
    update_clutch,
    update_wrist,
)
from .mathutil import Quat, RngStream, Vec3
from .recording import (
    EpisodeMetadata,
    FrameData,
    capture_frame,
    generate_episode_id,
    write_episode,
)
from .robot import ARM_LEFT_SLICE, ARM_RIGHT_SLICE, RobotModel, load_robot_model
from .scene import DifficultyConfig, RoomTemplate, SceneInstance, generate_scene
from .task import (
    EpisodePhase,
    EpisodeRecord,
    EpisodeTracker,
    FsmEvent,
    Leaderboard,
    LeaderboardEntry,
)
from .world import SimConfig, WorldState

SMOOTHING_ALPHA = 0.9


@dataclass
class ControlPipelineState:
    clutch: dict[str, ClutchState]
    targets: dict[str, IKTarget]
    filter: SmoothingFilter
    gait_phase: float = 0.0

    @staticmethod
    def fresh(alpha: float = SMOOTHING_ALPHA) -> "ControlPipelineState":
        return ControlPipelineState(
            clutch={"left": ClutchState(), "right": ClutchState()},
            targets={"left": IKTarget(), "right": IKTarget()},
            filter=SmoothingFilter(alpha),
        )


@dataclass(frozen=True)
class EpisodeResult:
    record: EpisodeRecord
    rank: int | None
    episode_path: str | None


@dataclass(frozen=True)
class TickEvents:
    deposits: tuple[str, ...] = ()
    completed: EpisodeResult | None = None
    reset: bool = False


@dataclass
class SessionConfig:
    difficulty: DifficultyConfig
    seed: int
    sim: SimConfig = field(default_factory=SimConfig)
    player: str = "anonymous"
    data_dir: str | None = None  # episodes written here when set
    reset_delay_s: float = 3.0
    completion_mode: str = "all"  # or "first" 


class SessionCore:
    """Owns exactly one world and control state; single-threaded by design."""

    def __init__(self, library: list[RoomTemplate], model: RobotModel | None,
                 config: SessionConfig, leaderboard: Leaderboard | None = None):
        self.library = library
        self.model = model or load_robot_model()
        self.config = config
        self.leaderboard = leaderboard
        self.episode_index = 0
        self.current_input = ControlInput()
        self.input_timeline: list[tuple[int, ControlInput]] = []
        self._episode_id_override: str | None = None
        self._setup_episode()

    # -- lifecycle ----------------------------------------------------------

    def _episode_seed(self) -> int:
        if self.episode_index == 0:
            return self.config.seed
        stream = RngStream(self.config.seed, f"session/episode{self.episode_index}")
        return stream.uniform_int(0, 2**62)

    def _setup_episode(self) -> None:
        self.episode_seed = self._episode_seed()
        self.scene: SceneInstance = generate_scene(
            self.library, self.config.difficulty, self.episode_seed
        )
        self.world: WorldState = WorldState.from_scene(self.scene, self.model, self.config.sim)
        self.control = ControlPipelineState.fresh()
        self.tracker = EpisodeTracker(
            total_trash=len(self.world.objects),
            reset_delay_s=self.config.reset_delay_s,
            completion_mode=self.config.completion_mode,
        )
        self.frames: list[FrameData] = []
        self.current_input = ControlInput()
        self.input_timeline = []

    @property
    def phase(self) -> EpisodePhase:
        return self.tracker.phase

    def begin_episode(self) -> None:
        """Init -> InProgress; captures the initial frame at timestamp zero."""
        self.tracker.apply(FsmEvent.SCENE_READY)
        self.frames.append(self._capture(ChassisCommand(), np.zeros(29)))

    def apply_input(self, inp: ControlInput) -> None:
        """Sticky last-writer-wins; consumed by the next tick."""
        self.current_input = inp
        self.input_timeline.append((self.world.tick, inp))

    def abort(self) -> None:
        if self.phase is EpisodePhase.IN_PROGRESS:
            self.tracker.abort(self.world.time)
            self.frames = []

    # -- per-tick pipeline ----------------------------------------------------

    def _assemble_commands(self, inp: ControlInput) -> tuple[ChassisCommand, np.ndarray]:
        sim = self.config.sim
        chassis = map_chassis(inp, sim.v_max, sim.w_max)
        ctl = self.control
        for side in ("left", "right"):
            hand = inp.hand(side)
            ctl.clutch[side], ctl.targets[side] = update_clutch(
                ctl.clutch[side], hand, inp.camera_rot, ctl.targets[side],
                clamp_box_for(side),
            )
            wrist = update_wrist(ctl.clutch[side], hand, ctl.targets[side].wrist)
            ctl.targets[side] = IKTarget(ctl.targets[side].position, wrist)

        u_cmd = np.zeros(29)
        legs, ctl.gait_phase = gait_targets(
            ctl.gait_phase, chassis.v, chassis.w, sim.v_max, sim.w_max, sim.dt
        )
        u_cmd[0:12] = legs
        for side, sl in (("left", ARM_LEFT_SLICE), ("right", ARM_RIGHT_SLICE)):
            q, _reached = solve_arm_ik(
                self.model, side, ctl.targets[side], self.world.arm_joints(side)
            )
            u_cmd[sl] = q
        return chassis, u_cmd

    def _capture(self, chassis: ChassisCommand, smoothed: np.ndarray) -> FrameData:
        inp = self.current_input
        return capture_frame(
            self.world, self.control.targets, chassis,
            (inp.left.trigger, inp.right.trigger), smoothed,
        )

    def tick(self) -> TickEvents:
        """Advance one dt. Outside InProgress, time still flows (reset timing)."""
        inp = self.current_input
        if self.phase is not EpisodePhase.IN_PROGRESS:
            self.world.tick += 1
            return self._maybe_reset()

        chassis, u_cmd = self._assemble_commands(inp)
        u_smooth = self.control.filter.smooth(u_cmd)
        wrist = {s: self.control.targets[s].wrist for s in ("left", "right")}
        worldmod.step(
            self.world, chassis, u_smooth,
            (inp.left.trigger, inp.right.trigger), wrist, self.config.sim.dt,
        )
        for side in ("left", "right"):
            if inp.hand(side).trigger > 0.5:
                worldmod.try_grasp(self.world, side)
            else:
                worldmod.release(self.world, side)
        deposits = worldmod.check_goal(self.world)
        self.frames.append(self._capture(chassis, u_smooth))

        completed = None
        progress = self.tracker.on_goal_progress(deposits, self.world.time)
        if progress.episode_complete:
            completed = self._finish_episode(progress.completion_time_s)
        return TickEvents(deposits=tuple(deposits), completed=completed)

    def _maybe_reset(self) -> TickEvents:
        t = self.tracker
        if t.phase in (EpisodePhase.COMPLETE, EpisodePhase.ABORT) \
                and t.reset_at_s is not None and self.world.time >= t.reset_at_s:
            t.apply(FsmEvent.RESET_ELAPSED)
            self.episode_index += 1
            self._setup_episode()
            return TickEvents(reset=True)
        return TickEvents()

    def _finish_episode(self, completion_time: float) -> EpisodeResult:
        episode_id = self._episode_id_override or generate_episode_id()
        if self.config.data_dir is not None and self._episode_id_override is None:
            # resolve second-resolution collisions up front so the record,
            # metadata and directory all carry the same id
            base, suffix = episode_id, 2
            while (Path(self.config.data_dir) / episode_id).exists():
                episode_id = f"{base}_{suffix}"
                suffix += 1
        record = EpisodeRecord(
            episode_id=episode_id,
            difficulty=self.config.difficulty.level,
            seed=self.episode_seed,
            success=True,
            frame_count=len(self.frames),
            completion_time_s=completion_time,
        )
        path = None
        if self.config.data_dir is not None:
            meta = EpisodeMetadata(
                episode_id=episode_id,
                difficulty=self.config.difficulty.level,
                scene_seed=self.episode_seed,
                template_id=self.scene.template_id,
                total_frames=len(self.frames),
                success=True,
                completion_time_s=completion_time,
                player=self.config.player,
            )
            path = str(write_episode(self.frames, meta, self.config.data_dir))
        rank = None
        if self.leaderboard is not None:
            rank = self.leaderboard.insert(
                LeaderboardEntry(
                    player=self.config.player,
                    time_s=completion_time,
                    episode_id=episode_id,
                    difficulty=self.config.difficulty.level,
                )
            )
        return EpisodeResult(record=record, rank=rank, episode_path=path)


# ---------------------------------------------------------------------------
# wire-format helpers shared by the service, the replay path and the tests
# ---------------------------------------------------------------------------

def input_to_dict(inp: ControlInput) -> dict:
    return {
        "stick": list(inp.stick),
        "clutch_l": inp.left.clutch,
        "clutch_r": inp.right.clutch,
        "controller_pose_l": {"pos": inp.left.controller_pos.to_list(),
                              "rot": inp.left.controller_rot.to_list()},
        "controller_pose_r": {"pos": inp.right.controller_pos.to_list(),
                              "rot": inp.right.controller_rot.to_list()},
        "trigger_l": inp.left.trigger,
        "trigger_r": inp.right.trigger,
        "camera_pose": {"pos": inp.camera_pos.to_list(),
                        "rot": inp.camera_rot.to_list()},
    }


def input_from_dict(data: dict) -> ControlInput:
    def hand(which: str) -> HandInput:
        pose = data.get(f"controller_pose_{which}") or {}
        pos = pose.get("pos", [0.0, 0.0, 0.0])
        rot = pose.get("rot", [1.0, 0.0, 0.0, 0.0])
        return HandInput(
            clutch=bool(data.get(f"clutch_{which}", False)),
            controller_pos=Vec3(*map(float, pos)),
            controller_rot=Quat(*map(float, rot)).normalized(),
            trigger=float(data.get(f"trigger_{which}", 0.0)),
        )

    cam = data.get("camera_pose") or {}
    stick = data.get("stick", [0.0, 0.0])
    return ControlInput(
        stick=(float(stick[0]), float(stick[1])),
        left=hand("l"),
        right=hand("r"),
        camera_pos=Vec3(*map(float, cam.get("pos", [0.0, 0.0, 0.0]))),
        camera_rot=Quat(*map(float, cam.get("rot", [1.0, 0.0, 0.0, 0.0]))).normalized(),
    )


def replay_timeline(library: list[RoomTemplate], model: RobotModel | None,
                    config: SessionConfig, timeline: list[tuple[int, ControlInput]],
                    episode_id: str | None = None,
                    max_ticks: int = 200_000) -> tuple[SessionCore, EpisodeResult | None]:
    """Re-run a recorded (tick, input) timeline; deterministic by construction."""
    session = SessionCore(library, model, config)
    session._episode_id_override = episode_id
    session.begin_episode()
    pending = sorted(timeline, key=lambda e: e[0])
    idx = 0
    result = None
    for _ in range(max_ticks):
        while idx < len(pending) and pending[idx][0] <= session.world.tick:
            session.current_input = pending[idx][1]
            idx += 1
        events = session.tick()
        if events.completed is not None:
            result = events.completed
            break
        if idx >= len(pending) and session.phase is not EpisodePhase.IN_PROGRESS:
            break
    return session, result
