"""Robot description: 29 body joints, two 7-joint arm chains, 12 hand joints.

Models are plain JSON (see ``docs/formats.md``); a default humanoid matching
the 12 leg / 3 waist / 14 arm / 12 hand layout ships with the package. Angles
in the file are degrees for readability and are converted to radians here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels

LEG_SLICE = slice(0, 12)
WAIST_SLICE = slice(12, 15)
ARM_LEFT_SLICE = slice(15, 22)
ARM_RIGHT_SLICE = slice(22, 29)
NUM_BODY_JOINTS = 29
NUM_HAND_JOINTS = 12


class RobotModelError(ValueError):
    pass


@dataclass(frozen=True)
class BodyJoint:
    name: str
    group: str  # leg | waist | arm_left | arm_right
    axis: tuple[float, float, float]
    lower: float
    upper: float
    max_velocity: float  # rad/s


@dataclass(frozen=True)
class ArmChain:
    """Serial chain rooted at the shoulder, expressed in the base frame."""

    side: str
    shoulder_offset: np.ndarray  # (3,) base frame, meters
    axes: np.ndarray  # (7, 3) unit axes
    offsets: np.ndarray  # (7, 3) link offsets, meters
    tip: np.ndarray  # (3,) hand point past the last joint
    lower: np.ndarray  # (7,)
    upper: np.ndarray  # (7,)
    home_joints: np.ndarray  # (7,)
    home_position: np.ndarray = field(init=False)  # FK(home) + shoulder, base frame
    max_reach: float = field(init=False)

    def __post_init__(self):
        local = kernels.fk_point(self.axes, self.offsets, self.tip, self.home_joints)
        object.__setattr__(self, "home_position", self.shoulder_offset + local)
        reach = float(np.linalg.norm(self.offsets, axis=1).sum() + np.linalg.norm(self.tip))
        object.__setattr__(self, "max_reach", reach)

    def fk(self, q: np.ndarray) -> np.ndarray:
        """End-effector position in the base frame."""
        return self.shoulder_offset + kernels.fk_point(self.axes, self.offsets, self.tip, q)


@dataclass(frozen=True)
class HandJoint:
    name: str
    open_angle: float
    grasp_angle: float


@dataclass(frozen=True)
class RobotModel:
    name: str
    body_joints: tuple[BodyJoint, ...]
    arms: dict[str, ArmChain]
    hands: dict[str, tuple[HandJoint, ...]]  # 6 joints per side
    gripper_rate: float  # rad/s, every hand joint moves at this rate
    servo_omega: float  # natural frequency of the joint position servo

    def joint_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.lower for j in self.body_joints])
        hi = np.array([j.upper for j in self.body_joints])
        return lo, hi

    def max_velocities(self) -> np.ndarray:
        return np.array([j.max_velocity for j in self.body_joints])

    def grasp_angles(self, side: str) -> np.ndarray:
        return np.array([h.grasp_angle for h in self.hands[side]])

    def open_angles(self, side: str) -> np.ndarray:
        return np.array([h.open_angle for h in self.hands[side]])


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise RobotModelError(f"robot model missing '{key}' in {where}")
    return data[key]


def _parse_arm(side: str, data: dict) -> ArmChain:
    joints = _require(data, "joints", f"arms.{side}")
    if len(joints) != 7:
        raise RobotModelError(f"arm '{side}' must have 7 joints, got {len(joints)}")
    axes = np.array([j["axis"] for j in joints], dtype=np.float64)
    norms = np.linalg.norm(axes, axis=1)
    if np.any(norms == 0):
        raise RobotModelError(f"arm '{side}' has a zero joint axis")
    axes /= norms[:, None]
    return ArmChain(
        side=side,
        shoulder_offset=np.array(_require(data, "shoulder_offset", side), dtype=np.float64),
        axes=axes,
        offsets=np.array([j["offset"] for j in joints], dtype=np.float64),
        tip=np.array(_require(data, "tip", side), dtype=np.float64),
        lower=np.array([math.radians(j["limits_deg"][0]) for j in joints]),
        upper=np.array([math.radians(j["limits_deg"][1]) for j in joints]),
        home_joints=np.array([math.radians(a) for a in _require(data, "home_joints_deg", side)]),
    )


def load_robot_model(path: str | Path | None = None) -> RobotModel:
    """Load a robot model JSON; with no path, the bundled default humanoid."""
    if path is None:
        raw = resources.files("binpick.data").joinpath("robot_humanoid.json").read_text()
    else:
        raw = Path(path).read_text()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise RobotModelError(f"robot model is not valid JSON: {exc}") from exc

    body = []
    for j in _require(data, "body_joints", "model"):
        lo, hi = j["limits_deg"]
        if lo >= hi:
            raise RobotModelError(f"joint '{j['name']}' limits must satisfy lower < upper")
        body.append(
            BodyJoint(
                name=j["name"],
                group=j["group"],
                axis=tuple(j["axis"]),
                lower=math.radians(lo),
                upper=math.radians(hi),
                max_velocity=math.radians(j["max_vel_deg_s"]),
            )
        )
    if len(body) != NUM_BODY_JOINTS:
        raise RobotModelError(f"expected {NUM_BODY_JOINTS} body joints, got {len(body)}")
    groups = [j.group for j in body]
    expected = ["leg"] * 12 + ["waist"] * 3 + ["arm_left"] * 7 + ["arm_right"] * 7
    if groups != expected:
        raise RobotModelError("body joints must be ordered 12 leg, 3 waist, 7 left arm, 7 right arm")

    arms = {side: _parse_arm(side, _require(data, "arms", "model")[side]) for side in ("left", "right")}
    hands = {}
    for side in ("left", "right"):
        entries = _require(data, "hands", "model")[side]
        if len(entries) != 6:
            raise RobotModelError(f"hand '{side}' must have 6 joints")
        hands[side] = tuple(
            HandJoint(e["name"], math.radians(e["open_deg"]), math.radians(e["grasp_deg"]))
            for e in entries
        )

    return RobotModel(
        name=data.get("name", "robot"),
        body_joints=tuple(body),
        arms=arms,
        hands=hands,
        gripper_rate=math.radians(data.get("gripper_rate_deg_s", 200.0)),
        servo_omega=float(data.get("servo_omega", 18.0)),
    )
