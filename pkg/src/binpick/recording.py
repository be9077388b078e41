"""Per-frame capture and episode persistence.

A successful episode is stored as a directory::

    episode_YYYYMMDD_HHmmss/
      metadata.json
      data.json        (array of frame records)
      cameras/         (always created, left empty; rendering is out of scope)

Only successful episodes may be written; the writer re-checks. Writes are
atomic (staged in a temp directory, then renamed), and a second success within
the same second gets a numeric suffix. ``docs/formats.md`` documents every
key. Frame keys are snake_case in a fixed order; a round trip through
write/read reproduces all values exactly.
"""

from __future__ import annotations

import json
import shutil
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .control import ChassisCommand, IKTarget
from .robot import ARM_LEFT_SLICE, ARM_RIGHT_SLICE, LEG_SLICE, WAIST_SLICE
from .world import WorldState

EPISODE_FORMAT_VERSION = 1

# index ranges [start, end) into the flat state/action vectors
STATE_MANIFEST = {
    "body_joint_positions": [0, 29],
    "hand_joint_positions": [29, 41],
    "root_position": [41, 44],
}
ACTION_MANIFEST = {
    "chassis": [0, 2],
    "ik_position_left": [2, 5],
    "ik_position_right": [5, 8],
    "wrist_quat_left": [8, 12],
    "wrist_quat_right": [12, 16],
    "triggers": [16, 18],
}
STATE_DIM = 44
ACTION_DIM = 18


class EpisodeFormatError(ValueError):
    """Raised when an episode directory cannot be parsed; names the file."""

    def __init__(self, file: str, message: str):
        super().__init__(f"{file}: {message}")
        self.file = file


@dataclass(frozen=True)
class ObjectPose:
    object_id: str
    position: list[float]
    orientation: list[float]  # w, x, y, z
    attached: bool


@dataclass(frozen=True)
class FrameData:
    timestamp: float
    leg_positions: list[float]
    leg_velocities: list[float]
    waist_positions: list[float]
    waist_velocities: list[float]
    arm_positions: list[float]
    arm_velocities: list[float]
    hand_positions: list[float]
    root_position: list[float]
    root_orientation: list[float]
    ik_position_left: list[float]
    ik_wrist_left: list[float]
    ik_position_right: list[float]
    ik_wrist_right: list[float]
    chassis: list[float]
    triggers: list[float]
    joint_targets_smoothed: list[float]
    objects: list[ObjectPose]

    def state_vector(self) -> np.ndarray:
        """44-dim: 29 body joint positions, 12 hand joints, 3D root position."""
        return np.array(
            self.leg_positions + self.waist_positions + self.arm_positions
            + self.hand_positions + self.root_position
        )

    def action_vector(self) -> np.ndarray:
        """18-dim: chassis, both IK target positions, both wrist quats, triggers."""
        return np.array(
            self.chassis + self.ik_position_left + self.ik_position_right
            + self.ik_wrist_left + self.ik_wrist_right + self.triggers
        )


@dataclass(frozen=True)
class EpisodeMetadata:
    episode_id: str
    difficulty: str
    scene_seed: int
    template_id: str
    total_frames: int
    success: bool
    completion_time_s: float | None
    player: str = "anonymous"
    format_version: int = EPISODE_FORMAT_VERSION
    state_manifest: dict = field(default_factory=lambda: dict(STATE_MANIFEST))
    action_manifest: dict = field(default_factory=lambda: dict(ACTION_MANIFEST))


def _floats(a) -> list[float]:
    return [float(v) for v in a]


def capture_frame(world: WorldState, targets: dict[str, IKTarget],
                  chassis: ChassisCommand, triggers: tuple[float, float],
                  smoothed_targets: np.ndarray) -> FrameData:
    """Snapshot the declared per-frame fields; a pure read of the world."""
    return FrameData(
        timestamp=world.time,
        leg_positions=_floats(world.body_angles[LEG_SLICE]),
        leg_velocities=_floats(world.body_velocities[LEG_SLICE]),
        waist_positions=_floats(world.body_angles[WAIST_SLICE]),
        waist_velocities=_floats(world.body_velocities[WAIST_SLICE]),
        arm_positions=_floats(world.body_angles[ARM_LEFT_SLICE])
        + _floats(world.body_angles[ARM_RIGHT_SLICE]),
        arm_velocities=_floats(world.body_velocities[ARM_LEFT_SLICE])
        + _floats(world.body_velocities[ARM_RIGHT_SLICE]),
        hand_positions=_floats(world.hand_angles),
        root_position=[world.base_x, 0.0, world.base_z],
        root_orientation=[float(v) for v in world.base_rotation().to_list()],
        ik_position_left=targets["left"].position.to_list(),
        ik_wrist_left=targets["left"].wrist.to_list(),
        ik_position_right=targets["right"].position.to_list(),
        ik_wrist_right=targets["right"].wrist.to_list(),
        chassis=[chassis.v, chassis.w],
        triggers=[float(triggers[0]), float(triggers[1])],
        joint_targets_smoothed=_floats(smoothed_targets),
        objects=[
            ObjectPose(
                object_id=o.object_id,
                position=o.center.to_list(),
                orientation=[float(v) for v in o.orientation.to_list()],
                attached=o.attached_to is not None,
            )
            for o in world.objects
        ],
    )


def generate_episode_id(when: datetime | None = None) -> str:
    when = when or datetime.now(timezone.utc)
    return when.strftime("episode_%Y%m%d_%H%M%S")


def _frame_to_dict(f: FrameData) -> dict:
    d = {
        "timestamp": f.timestamp,
        "leg_positions": f.leg_positions,
        "leg_velocities": f.leg_velocities,
        "waist_positions": f.waist_positions,
        "waist_velocities": f.waist_velocities,
        "arm_positions": f.arm_positions,
        "arm_velocities": f.arm_velocities,
        "hand_positions": f.hand_positions,
        "root_position": f.root_position,
        "root_orientation": f.root_orientation,
        "ik_position_left": f.ik_position_left,
        "ik_wrist_left": f.ik_wrist_left,
        "ik_position_right": f.ik_position_right,
        "ik_wrist_right": f.ik_wrist_right,
        "chassis": f.chassis,
        "triggers": f.triggers,
        "joint_targets_smoothed": f.joint_targets_smoothed,
        "objects": [
            {
                "id": o.object_id,
                "position": o.position,
                "orientation": o.orientation,
                "attached": o.attached,
            }
            for o in f.objects
        ],
    }
    return d


def _metadata_to_dict(meta: EpisodeMetadata) -> dict:
    return {
        "format_version": meta.format_version,
        "episode_id": meta.episode_id,
        "difficulty": meta.difficulty,
        "scene_seed": meta.scene_seed,
        "template_id": meta.template_id,
        "total_frames": meta.total_frames,
        "success": meta.success,
        "completion_time_s": meta.completion_time_s,
        "player": meta.player,
        "state_manifest": meta.state_manifest,
        "action_manifest": meta.action_manifest,
    }


def write_episode(frames: list[FrameData], meta: EpisodeMetadata,
                  root_dir: str | Path) -> Path:
    """Persist a successful episode; returns the final directory path."""
    if not meta.success:
        raise ValueError("refusing to write an unsuccessful episode")
    if meta.total_frames != len(frames):
        raise ValueError(
            f"metadata.total_frames={meta.total_frames} does not match {len(frames)} frames"
        )
    root = Path(root_dir)
    root.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=root, prefix=".episode-staging-"))
    try:
        (staging / "cameras").mkdir()
        (staging / "metadata.json").write_text(
            json.dumps(_metadata_to_dict(meta), indent=2) + "\n"
        )
        (staging / "data.json").write_text(
            json.dumps([_frame_to_dict(f) for f in frames], separators=(",", ":")) + "\n"
        )
        final = root / meta.episode_id
        suffix = 2
        while final.exists():
            final = root / f"{meta.episode_id}_{suffix}"
            suffix += 1
        staging.rename(final)
        return final
    except Exception:
        shutil.rmtree(staging, ignore_errors=True)
        raise


def read_episode(path: str | Path) -> tuple[EpisodeMetadata, list[FrameData]]:
    """Load an episode directory; malformed input raises EpisodeFormatError."""
    path = Path(path)
    meta_path = path / "metadata.json"
    data_path = path / "data.json"
    if not meta_path.exists():
        raise EpisodeFormatError("metadata.json", f"missing from {path}")
    if not data_path.exists():
        raise EpisodeFormatError("data.json", f"missing from {path}")
    try:
        meta_raw = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise EpisodeFormatError("metadata.json", f"invalid JSON: {exc}") from exc
    version = meta_raw.get("format_version")
    if version != EPISODE_FORMAT_VERSION:
        raise EpisodeFormatError(
            "metadata.json", f"unsupported format_version {version!r}"
        )
    try:
        meta = EpisodeMetadata(
            episode_id=meta_raw["episode_id"],
            difficulty=meta_raw["difficulty"],
            scene_seed=meta_raw["scene_seed"],
            template_id=meta_raw["template_id"],
            total_frames=meta_raw["total_frames"],
            success=meta_raw["success"],
            completion_time_s=meta_raw["completion_time_s"],
            player=meta_raw["player"],
            format_version=version,
            state_manifest=meta_raw["state_manifest"],
            action_manifest=meta_raw["action_manifest"],
        )
    except KeyError as exc:
        raise EpisodeFormatError("metadata.json", f"missing field {exc}") from exc

    try:
        frames_raw = json.loads(data_path.read_text())
    except json.JSONDecodeError as exc:
        raise EpisodeFormatError("data.json", f"invalid JSON: {exc}") from exc
    frames = []
    for i, f in enumerate(frames_raw):
        try:
            frames.append(
                FrameData(
                    timestamp=f["timestamp"],
                    leg_positions=f["leg_positions"],
                    leg_velocities=f["leg_velocities"],
                    waist_positions=f["waist_positions"],
                    waist_velocities=f["waist_velocities"],
                    arm_positions=f["arm_positions"],
                    arm_velocities=f["arm_velocities"],
                    hand_positions=f["hand_positions"],
                    root_position=f["root_position"],
                    root_orientation=f["root_orientation"],
                    ik_position_left=f["ik_position_left"],
                    ik_wrist_left=f["ik_wrist_left"],
                    ik_position_right=f["ik_position_right"],
                    ik_wrist_right=f["ik_wrist_right"],
                    chassis=f["chassis"],
                    triggers=f["triggers"],
                    joint_targets_smoothed=f["joint_targets_smoothed"],
                    objects=[
                        ObjectPose(o["id"], o["position"], o["orientation"], o["attached"])
                        for o in f["objects"]
                    ],
                )
            )
        except KeyError as exc:
            raise EpisodeFormatError("data.json", f"frame {i} missing field {exc}") from exc
    if meta.total_frames != len(frames):
        raise EpisodeFormatError(
            "metadata.json",
            f"total_frames={meta.total_frames} does not match {len(frames)} frames",
        )
    return meta, frames


def list_episodes(root_dir: str | Path) -> list[Path]:
    root = Path(root_dir)
    if not root.is_dir():
        return []
    return sorted(p for p in root.iterdir() if p.is_dir() and p.name.startswith("episode_"))
