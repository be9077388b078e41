"""Dataset-quality metrics: bin coverage, activity rates, durations, extents.

The coverage metric partitions each dimension's range into equal-width bins
(20 by default) and averages, across the subspace's dimensions, the fraction
of bins containing at least one sample. Ranges come either from declared
physical limits (joint limits, clamp boxes, velocity caps) or from the
observed min/max; reports name the mode used per subspace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import LEFT_CLAMP_BOX, RIGHT_CLAMP_BOX
from .mathutil import Quat
from .recording import FrameData, list_episodes, read_episode
from .robot import RobotModel, load_robot_model
from .world import SimConfig

DEFAULT_BINS = 20
CHASSIS_EPS = 1e-3
ARM_EPS = 1e-6
TRIGGER_EPS = 0.05
WRIST_DECLARED_LIMIT = math.radians(45.0)


@dataclass(frozen=True)
class SubspaceSpec:
    name: str
    indices: tuple[int, ...]
    range_mode: str  # declared | observed
    declared: tuple[tuple[float, float], ...] | None = None
    active_only: bool = False

    def __post_init__(self):
        if self.range_mode == "declared":
            if self.declared is None or len(self.declared) != len(self.indices):
                raise ValueError(f"subspace '{self.name}' needs one declared range per dim")
            for lo, hi in self.declared:
                if not lo < hi:
                    raise ValueError(f"subspace '{self.name}' declared range must have min < max")


def bin_coverage(samples: np.ndarray, spec: SubspaceSpec, bins: int = DEFAULT_BINS) -> float:
    """Average fraction of occupied equal-width bins across the subspace dims.

    The last bin edge is closed so the maximum sample lands in the top bin;
    samples outside a declared range are clipped into the edge bins. A
    zero-width dimension contributes 1/bins.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.shape[0] == 0:
        raise ValueError("bin_coverage requires at least one sample")
    cols = samples[:, list(spec.indices)]
    ratios = []
    for j in range(cols.shape[1]):
        x = cols[:, j]
        if spec.range_mode == "declared":
            lo, hi = spec.declared[j]
        else:
            lo, hi = float(x.min()), float(x.max())
        if hi <= lo:
            ratios.append(1.0 / bins)
            continue
        idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.int64)
        idx = np.clip(idx, 0, bins - 1)
        ratios.append(len(np.unique(idx)) / bins)
    # sequential average keeps bitwise agreement with per-sample oracles
    return sum(ratios) / len(ratios)


def chassis_active(frames: list[FrameData], eps: float = CHASSIS_EPS) -> np.ndarray:
    return np.array([abs(f.chassis[0]) > eps or abs(f.chassis[1]) > eps for f in frames])


def arm_ik_active(frames: list[FrameData], eps: float = ARM_EPS) -> np.ndarray:
    """True where either hand's IK target position moved since the last frame."""
    active = np.zeros(len(frames), dtype=bool)
    for i in range(1, len(frames)):
        for attr in ("ik_position_left", "ik_position_right"):
            a = getattr(frames[i], attr)
            b = getattr(frames[i - 1], attr)
            if any(abs(x - y) > eps for x, y in zip(a, b)):
                active[i] = True
                break
    return active


def gripper_active(frames: list[FrameData], eps: float = TRIGGER_EPS) -> np.ndarray:
    return np.array([f.triggers[0] > eps or f.triggers[1] > eps for f in frames])


def activity_rates(frames: list[FrameData]) -> dict[str, float]:
    if not frames:
        raise ValueError("activity_rates requires at least one frame")
    n = len(frames)
    return {
        "chassis": float(chassis_active(frames).sum()) / n,
        "arm_ik": float(arm_ik_active(frames).sum()) / n,
        "gripper": float(gripper_active(frames).sum()) / n,
    }


@dataclass(frozen=True)
class DurationStats:
    mean: float
    sample_std: float
    min: float
    max: float

    def to_dict(self) -> dict:
        return {"mean_s": self.mean, "sample_std_s": self.sample_std,
                "min_s": self.min, "max_s": self.max}


def duration_stats(durations: list[float]) -> DurationStats:
    if not durations:
        raise ValueError("duration_stats requires at least one episode")
    arr = np.asarray(durations, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return DurationStats(float(arr.mean()), std, float(arr.min()), float(arr.max()))


def trajectory_extent(frame_groups: list[list[FrameData]]) -> tuple[float, float]:
    """Componentwise span of root positions pooled over all episodes."""
    xs, zs = [], []
    for frames in frame_groups:
        for f in frames:
            xs.append(f.root_position[0])
            zs.append(f.root_position[2])
    if not xs:
        raise ValueError("trajectory_extent requires at least one frame")
    return max(xs) - min(xs), max(zs) - min(zs)


def ik_heatmap(frames: list[FrameData], grid: int = 8,
               active_only: bool = True) -> np.ndarray:
    """Occupancy counts of right-hand IK target (x, y) over the clamp box."""
    if grid < 1:
        raise ValueError("grid must be >= 1")
    counts = np.zeros((grid, grid), dtype=np.int64)
    mask = arm_ik_active(frames) if active_only else np.ones(len(frames), dtype=bool)
    (x_lo, x_hi), (y_lo, y_hi) = RIGHT_CLAMP_BOX.x, RIGHT_CLAMP_BOX.y
    for f, m in zip(frames, mask):
        if not m:
            continue
        x, y = f.ik_position_right[0], f.ik_position_right[1]
        i = min(grid - 1, max(0, int((x - x_lo) / (x_hi - x_lo) * grid)))
        j = min(grid - 1, max(0, int((y - y_lo) / (y_hi - y_lo) * grid)))
        counts[i, j] += 1
    return counts


# ---------------------------------------------------------------------------
# corpus-level analysis
# ---------------------------------------------------------------------------

def _wrist_euler_matrix(frames: list[FrameData]) -> np.ndarray:
    rows = np.empty((len(frames), 6))
    for i, f in enumerate(frames):
        le = Quat(*f.ik_wrist_left).to_euler_xyz()
        re = Quat(*f.ik_wrist_right).to_euler_xyz()
        rows[i] = (*le, *re)
    return rows


def default_subspaces(model: RobotModel, sim: SimConfig,
                      range_mode: str) -> dict[str, SubspaceSpec]:
    """The six reported subspaces over the state/action manifests.

    In declared mode, subspaces with physical limits use them; the robot
    position has no declared range (room-dependent) and stays observed.
    """
    lo, hi = model.joint_limits()
    body_ranges = tuple((float(a), float(b)) for a, b in zip(lo, hi))
    hand_ranges = []
    for side in ("left", "right"):
        for h in model.hands[side]:
            hand_ranges.append((min(h.open_angle, h.grasp_angle),
                                max(h.open_angle, h.grasp_angle)))
    ik_ranges = (LEFT_CLAMP_BOX.x, LEFT_CLAMP_BOX.y, LEFT_CLAMP_BOX.z,
                 RIGHT_CLAMP_BOX.x, RIGHT_CLAMP_BOX.y, RIGHT_CLAMP_BOX.z)
    chassis_ranges = ((-sim.v_max, sim.v_max), (-sim.w_max, sim.w_max))
    wrist_ranges = tuple((-WRIST_DECLARED_LIMIT, WRIST_DECLARED_LIMIT) for _ in range(6))
    declared = range_mode == "declared"

    def spec(name, indices, ranges=None, active=False):
        if declared and ranges is not None:
            return SubspaceSpec(name, tuple(indices), "declared", tuple(ranges), active)
        return SubspaceSpec(name, tuple(indices), "observed", None, active)

    return {
        "body_joints": spec("body_joints", range(0, 29), body_ranges),
        "hand_joints": spec("hand_joints", range(29, 41), hand_ranges),
        "arm_ik_position": spec("arm_ik_position", range(0, 6), ik_ranges, active=True),
        "chassis_motion": spec("chassis_motion", range(0, 2), chassis_ranges, active=True),
        "robot_position": spec("robot_position", range(41, 44)),
        "wrist_rotation": spec("wrist_rotation", range(0, 6), wrist_ranges),
    }


@dataclass
class EpisodeSet:
    """Loaded corpus: all frames plus per-episode durations."""

    episodes: list[tuple[str, list[FrameData]]]
    durations: list[float]

    @staticmethod
    def load(data_dir: str | Path) -> "EpisodeSet":
        paths = list_episodes(data_dir)
        if not paths:
            raise FileNotFoundError(f"no episodes found under {data_dir}")
        episodes, durations = [], []
        for p in paths:
            meta, frames = read_episode(p)
            episodes.append((meta.episode_id, frames))
            durations.append(meta.completion_time_s)
        return EpisodeSet(episodes, durations)

    def all_frames(self) -> list[FrameData]:
        return [f for _, frames in self.episodes for f in frames]


def analyze(episode_set: EpisodeSet, model: RobotModel | None = None,
            sim: SimConfig | None = None, bins: int = DEFAULT_BINS,
            range_mode: str = "declared", active_only: bool = False,
            heatmap_grid: int = 8) -> dict:
    """Full report over a corpus; the `coverage` section mirrors Table-style
    per-subspace rows, plus activity rates, duration stats and extents."""
    if range_mode not in ("declared", "observed"):
        raise ValueError("range_mode must be 'declared' or 'observed'")
    model = model or load_robot_model()
    sim = sim or SimConfig()
    frames = episode_set.all_frames()
    state = np.array([f.state_vector() for f in frames])
    action = np.array([f.action_vector() for f in frames])
    wrist = _wrist_euler_matrix(frames)
    arm_mask = arm_ik_active(frames)
    chassis_mask = chassis_active(frames)
    subspaces = default_subspaces(model, sim, range_mode)

    matrices = {
        "body_joints": state,
        "hand_joints": state,
        "robot_position": state,
        "arm_ik_position": action[:, 2:8],
        "chassis_motion": action[:, 0:2],
        "wrist_rotation": wrist,
    }
    masks = {"arm_ik_position": arm_mask, "chassis_motion": chassis_mask}

    coverage = {}
    for name, spec in subspaces.items():
        mat = matrices[name]
        if active_only and spec.active_only:
            mask = masks[name]
            used = mat[mask] if mask.any() else mat
            note = "active_frames"
        else:
            used = mat
            note = "all_frames"
        coverage[name] = {
            "coverage": bin_coverage(used, spec, bins),
            "bins": bins,
            "dims": len(spec.indices),
            "range_mode": spec.range_mode,
            "frames": int(used.shape[0]),
            "frame_selection": note,
        }

    span_x, span_z = trajectory_extent([f for _, f in episode_set.episodes])
    heat = ik_heatmap(frames, heatmap_grid, active_only=True)
    return {
        "episodes": len(episode_set.episodes),
        "frames": len(frames),
        "duration_stats": duration_stats(episode_set.durations).to_dict(),
        "activity_rates": activity_rates(frames),
        "coverage": coverage,
        "trajectory_extent": {"span_x_m": span_x, "span_z_m": span_z},
        "ik_heatmap": {
            "grid": heatmap_grid,
            "active_frames": int(heat.sum()),
            "counts": heat.tolist(),
        },
    }


def compare_groups(report_a: dict, report_b: dict,
                   label_a: str = "a", label_b: str = "b") -> dict:
    """Side-by-side report with deltas (b minus a) for every shared metric."""
    deltas = {
        "duration_mean_s": report_b["duration_stats"]["mean_s"]
        - report_a["duration_stats"]["mean_s"],
        "activity_rates": {
            k: report_b["activity_rates"][k] - report_a["activity_rates"][k]
            for k in report_a["activity_rates"]
        },
        "coverage": {
            name: report_b["coverage"][name]["coverage"]
            - report_a["coverage"][name]["coverage"]
            for name in report_a["coverage"]
            if name in report_b["coverage"]
        },
    }
    return {label_a: report_a, label_b: report_b, "deltas": deltas}


def comparison_table(cmp: dict, label_a: str = "a", label_b: str = "b") -> str:
    """Plain-text side-by-side table of the headline metrics."""
    a, b = cmp[label_a], cmp[label_b]
    rows = [
        ("episodes", a["episodes"], b["episodes"]),
        ("mean duration (s)", a["duration_stats"]["mean_s"], b["duration_stats"]["mean_s"]),
        ("std duration (s)", a["duration_stats"]["sample_std_s"], b["duration_stats"]["sample_std_s"]),
        ("min / max (s)",
         f"{a['duration_stats']['min_s']:.1f} / {a['duration_stats']['max_s']:.1f}",
         f"{b['duration_stats']['min_s']:.1f} / {b['duration_stats']['max_s']:.1f}"),
    ]
    for k in ("chassis", "arm_ik", "gripper"):
        rows.append((f"{k} activity", a["activity_rates"][k], b["activity_rates"][k]))
    for name in a["coverage"]:
        if name in b["coverage"]:
            rows.append((f"{name} coverage", a["coverage"][name]["coverage"],
                         b["coverage"][name]["coverage"]))
    lines = [f"{'metric':<28}{label_a:>14}{label_b:>14}"]
    for name, va, vb in rows:
        fa = f"{va:.3f}" if isinstance(va, float) else str(va)
        fb = f"{vb:.3f}" if isinstance(vb, float) else str(vb)
        lines.append(f"{name:<28}{fa:>14}{fb:>14}")
    return "\n".join(lines)


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")


def write_heatmap_csv(report: dict, path: str | Path) -> None:
    counts = report["ik_heatmap"]["counts"]
    lines = [",".join(str(v) for v in row) for row in counts]
    Path(path).write_text("\n".join(lines) + "\n")
