"""Operator-input mapping: chassis, clutch-mode arm targets, wrist, gripper.

The clutch scheme moves an arm's IK target only while that hand's grip is
held: on engage the controller position and current target are anchored, and
subsequent controller displacement (re-expressed in the operator camera frame
and scaled per axis) offsets the anchored target, clamped to a per-hand safety
box. Releasing freezes the target; re-engaging re-anchors, so the target never
jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .mathutil import Quat, Vec3, clamp_incremental_rotation
from .robot import ArmChain, RobotModel
from . import kernels

WRIST_LIMIT_DEG = 45.0
TRIGGER_THRESHOLD = 0.5
STICK_DEADZONE = 0.05
IK_DAMPING = 0.05
IK_MAX_ITERS = 100
IK_TOL = 1e-6
IK_MAX_STEP = 0.1
IK_REACHED_TOL = 1e-3


@dataclass(frozen=True)
class ClampBox:
    """Per-axis closed intervals for an IK target position."""

    x: tuple[float, float]
    y: tuple[float, float]
    z: tuple[float, float]

    def clamp(self, p: Vec3) -> Vec3:
        return Vec3(
            min(max(p.x, self.x[0]), self.x[1]),
            min(max(p.y, self.y[0]), self.y[1]),
            min(max(p.z, self.z[0]), self.z[1]),
        )

    def contains(self, p: Vec3, tol: float = 0.0) -> bool:
        return (
            self.x[0] - tol <= p.x <= self.x[1] + tol
            and self.y[0] - tol <= p.y <= self.y[1] + tol
            and self.z[0] - tol <= p.z <= self.z[1] + tol
        )


RIGHT_CLAMP_BOX = ClampBox(x=(-0.08, 0.15), y=(-0.08, 0.35), z=(-0.15, 0.08))
LEFT_CLAMP_BOX = ClampBox(x=(-0.15, 0.08), y=(-0.08, 0.35), z=(-0.15, 0.08))


def clamp_box_for(side: str) -> ClampBox:
    return RIGHT_CLAMP_BOX if side == "right" else LEFT_CLAMP_BOX


@dataclass(frozen=True)
class HandInput:
    clutch: bool = False
    controller_pos: Vec3 = field(default_factory=Vec3.zero)
    controller_rot: Quat = field(default_factory=Quat.identity)
    trigger: float = 0.0


@dataclass(frozen=True)
class ControlInput:
    stick: tuple[float, float] = (0.0, 0.0)  # (x right, y forward), each in [-1, 1]
    left: HandInput = field(default_factory=HandInput)
    right: HandInput = field(default_factory=HandInput)
    camera_pos: Vec3 = field(default_factory=Vec3.zero)
    camera_rot: Quat = field(default_factory=Quat.identity)

    def __post_init__(self):
        for v in (*self.stick, self.left.trigger, self.right.trigger):
            if not math.isfinite(v):
                raise ValueError("control input must be finite")
        if not (abs(self.stick[0]) <= 1 and abs(self.stick[1]) <= 1):
            raise ValueError("stick axes must be in [-1, 1]")
        if not (0 <= self.left.trigger <= 1 and 0 <= self.right.trigger <= 1):
            raise ValueError("trigger values must be in [0, 1]")

    def hand(self, side: str) -> HandInput:
        return self.right if side == "right" else self.left


def sanitize_input(stick, left: HandInput, right: HandInput,
                   camera_pos: Vec3, camera_rot: Quat) -> tuple[ControlInput, bool]:
    """Clamp out-of-range axes/triggers into bounds; True if anything was clamped."""

    def _c(v, lo, hi):
        return min(max(float(v), lo), hi)

    cl_stick = (_c(stick[0], -1, 1), _c(stick[1], -1, 1))
    cl_left = replace(left, trigger=_c(left.trigger, 0, 1))
    cl_right = replace(right, trigger=_c(right.trigger, 0, 1))
    changed = cl_stick != tuple(stick) or cl_left.trigger != left.trigger \
        or cl_right.trigger != right.trigger
    return ControlInput(cl_stick, cl_left, cl_right, camera_pos, camera_rot), changed


@dataclass(frozen=True)
class ChassisCommand:
    v: float = 0.0  # m/s forward
    w: float = 0.0  # rad/s yaw, positive is counterclockwise from above


def map_chassis(inp: ControlInput, v_max: float, w_max: float) -> ChassisCommand:
    """Left stick to chassis velocities; rightward stick yields negative yaw."""
    sx, sy = inp.stick
    if abs(sx) < STICK_DEADZONE:
        sx = 0.0
    if abs(sy) < STICK_DEADZONE:
        sy = 0.0
    return ChassisCommand(v=sy * v_max, w=-sx * w_max)


@dataclass(frozen=True)
class IKTarget:
    """Desired hand pose: position in the base frame relative to the arm home."""

    position: Vec3 = field(default_factory=Vec3.zero)
    wrist: Quat = field(default_factory=Quat.identity)


@dataclass(frozen=True)
class ClutchState:
    engaged: bool = False
    anchor_controller_pos: Vec3 | None = None
    anchor_target: Vec3 | None = None
    anchor_controller_rot: Quat | None = None
    anchor_wrist: Quat | None = None
    scale: Vec3 = field(default_factory=lambda: Vec3(1.0, 1.0, 1.0))


def update_clutch(state: ClutchState, hand: HandInput, camera_rot: Quat,
                  target: IKTarget, box: ClampBox) -> tuple[ClutchState, IKTarget]:
    """Advance one frame of clutch logic; returns the new state and target."""
    if not hand.clutch:
        if state.engaged:
            state = replace(state, engaged=False, anchor_controller_pos=None,
                            anchor_target=None, anchor_controller_rot=None,
                            anchor_wrist=None)
        return state, target

    if not state.engaged:
        # engage edge: anchor everything, target unchanged
        state = replace(
            state,
            engaged=True,
            anchor_controller_pos=hand.controller_pos,
            anchor_target=target.position,
            anchor_controller_rot=hand.controller_rot,
            anchor_wrist=target.wrist,
        )
        return state, target

    delta_world = hand.controller_pos - state.anchor_controller_pos
    delta_cam = camera_rot.inverse().rotate(delta_world)
    delta_q = Vec3(delta_cam.x * state.scale.x, delta_cam.y * state.scale.y,
                   delta_cam.z * state.scale.z)
    new_pos = box.clamp(state.anchor_target + delta_q)
    return state, replace(target, position=new_pos)


def update_wrist(state: ClutchState, hand: HandInput, current: Quat) -> Quat:
    """Wrist follows the controller's incremental rotation only while clutched."""
    if not (state.engaged and hand.clutch) or state.anchor_controller_rot is None:
        return current
    increment = hand.controller_rot * state.anchor_controller_rot.inverse()
    clamped = clamp_incremental_rotation(increment, WRIST_LIMIT_DEG)
    return clamped * state.anchor_wrist


def step_gripper(current: np.ndarray, trigger: float, model: RobotModel,
                 side: str, dt: float) -> np.ndarray:
    """Drive the 6 hand joints toward grasp (trigger held) or open at the fixed rate."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    target = model.grasp_angles(side) if trigger > TRIGGER_THRESHOLD else model.open_angles(side)
    max_delta = model.gripper_rate * dt
    delta = np.clip(target - current, -max_delta, max_delta)
    return current + delta


class SmoothingFilter:
    """Per-channel exponential smoothing: out = a*prev + (1-a)*cmd.

    With no explicit initial state, the first command becomes the state, which
    avoids a startup transient from zero.
    """

    def __init__(self, alpha: float, initial: np.ndarray | None = None):
        if not 0 <= alpha < 1:
            raise ValueError("alpha must be in [0, 1)")
        self.alpha = alpha
        self.state = None if initial is None else np.asarray(initial, dtype=np.float64).copy()

    def smooth(self, u_cmd: np.ndarray) -> np.ndarray:
        u_cmd = np.asarray(u_cmd, dtype=np.float64)
        if self.state is None:
            self.state = u_cmd.copy()
        else:
            self.state = self.alpha * self.state + (1.0 - self.alpha) * u_cmd
        return self.state.copy()


def drive_joints(angles: np.ndarray, velocities: np.ndarray, targets: np.ndarray,
                 model: RobotModel, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Critically damped position servo with per-joint velocity caps and limits.

    Uses the exact discrete solution of x'' = w^2 (T - x) - 2 w x', so a step
    command approaches its target monotonically (never overshoots from rest).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    omega = model.servo_omega
    decay = math.exp(-omega * dt)
    y0 = angles - targets
    c = velocities + omega * y0
    y1 = (y0 + c * dt) * decay
    v1 = (c - omega * (y0 + c * dt)) * decay
    new_angles = targets + y1

    vmax = model.max_velocities()
    step_cap = vmax * dt
    delta = new_angles - angles
    over = np.abs(delta) > step_cap
    new_angles = np.where(over, angles + np.sign(delta) * step_cap, new_angles)
    v1 = np.where(over, np.sign(delta) * vmax, np.clip(v1, -vmax, vmax))

    lo, hi = model.joint_limits()
    clipped = np.clip(new_angles, lo, hi)
    v1 = np.where(clipped != new_angles, 0.0, v1)
    return clipped, v1


def solve_arm_ik(model: RobotModel, side: str, target: IKTarget,
                 seed_joints: np.ndarray) -> tuple[np.ndarray, bool]:
    """Position IK for one arm via damped least squares.

    The target position is base-frame relative to the arm's home pose. Falls
    back to a fixed fan of canonical seeds when the warm start stalls on a
    joint limit; unreachable targets return the best effort with reached=False.
    """
    if not target.position.is_finite():
        raise ValueError("IK target must be finite")
    arm = model.arms[side]
    chain_target = (arm.home_position - arm.shoulder_offset) + target.position.to_array()
    seeds = list(_ik_seeds(arm, seed_joints))
    if np.linalg.norm(chain_target) >= arm.max_reach:
        seeds.append(_extension_seed(arm, chain_target))
    best_q, best_err = None, math.inf
    for seed in seeds:
        q, err = kernels.solve_ik_dls(
            arm.axes, arm.offsets, arm.tip, seed, chain_target,
            arm.lower, arm.upper, IK_DAMPING, IK_MAX_ITERS, IK_TOL, IK_MAX_STEP,
        )
        if err < best_err:
            best_q, best_err = q, err
        if err < IK_REACHED_TOL / 10.0:
            break
    return best_q, best_err < IK_REACHED_TOL


_SEED_FRACTIONS = (
    (0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5),
    (0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25),
    (0.75, 0.75, 0.75, 0.75, 0.75, 0.75, 0.75),
    (0.75, 0.25, 0.5, 0.25, 0.5, 0.5, 0.5),
    (0.25, 0.75, 0.5, 0.75, 0.5, 0.5, 0.5),
    (0.5, 0.5, 0.25, 0.5, 0.75, 0.5, 0.5),
    (0.9, 0.5, 0.5, 0.1, 0.5, 0.5, 0.5),
    (0.1, 0.5, 0.5, 0.9, 0.5, 0.5, 0.5),
)


def _ik_seeds(arm: ArmChain, warm: np.ndarray):
    yield np.asarray(warm, dtype=np.float64)
    yield arm.home_joints
    span = arm.upper - arm.lower
    for frac in _SEED_FRACTIONS:
        yield arm.lower + np.asarray(frac) * span


def _extension_seed(arm: ArmChain, chain_target: np.ndarray) -> np.ndarray:
    """Fully stretched posture aimed along the target direction.

    The chain is straight whenever elbow and wrist pitch/yaw are zero, so the
    boundary posture only needs the shoulder pitch/roll that rotate the local
    -y axis onto the target direction. Seeding DLS here lets far targets land
    on the reachability boundary instead of crawling toward the singularity.
    """
    d = chain_target / np.linalg.norm(chain_target)
    pitch = math.atan2(-d[2], -d[1])
    roll = math.asin(max(-1.0, min(1.0, d[0])))
    q = np.zeros(7)
    q[0], q[1] = pitch, roll
    return np.clip(q, arm.lower, arm.upper)


def gait_targets(phase: float, v: float, w: float, v_max: float, w_max: float,
                 dt: float, frequency: float = 1.5) -> tuple[np.ndarray, float]:
    """Parametric walking oscillation for the 12 leg joints.

    Amplitude scales with commanded speed so logged leg channels track
    locomotion without a learned gait controller; idle commands decay to a
    neutral stance.
    """
    amp = 0.5 * abs(v) / v_max + 0.2 * abs(w) / w_max
    if amp > 1e-9:
        phase = phase + 2.0 * math.pi * frequency * dt
    targets = np.zeros(12)
    for leg, offset in ((0, 0.0), (1, math.pi)):
        ph = phase + offset
        hip = amp * 0.45 * math.sin(ph)
        knee = amp * 0.5 * max(0.0, math.sin(ph + 0.5 * math.pi))
        base = leg * 6
        targets[base + 0] = hip
        targets[base + 3] = knee
        targets[base + 4] = -0.5 * hip - 0.25 * knee
    return targets, phase
