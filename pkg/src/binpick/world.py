"""Fixed-timestep kinematic world: base motion, joints, grasping, goal zones.

There is no rigid-body dynamics here: the base follows unicycle kinematics,
joints follow their servos, held objects track the hand frame exactly, and a
released object settles instantly onto the highest support under it (or into a
bin when dropped over the bin's trigger footprint). Time advances in integer
ticks of a fixed dt, so long runs accumulate no float drift and identical
command sequences replay bit-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .control import ChassisCommand, drive_joints, step_gripper
from .mathutil import Aabb, Quat, Vec3, raycast_down
from .robot import ARM_LEFT_SLICE, ARM_RIGHT_SLICE, RobotModel
from .scene import ObjectSpec, SceneInstance, settle_aabb_centered

BIN_FLOOR_OFFSET = 0.02  # interior floor height above the bin base, meters


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.02
    v_max: float = 1.0
    w_max: float = 1.8
    grasp_radius: float = 0.08
    approach_cone_deg: float = 60.0
    count_held: bool = False
    wall_margin: float = 0.3  # base keeps this distance from the room walls

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass
class ObjectState:
    object_id: str
    spec: ObjectSpec
    center: Vec3
    orientation: Quat
    aabb: Aabb
    pose_tag: str
    attached_to: str | None = None
    grasp_offset_pos: Vec3 = field(default_factory=Vec3.zero)
    grasp_offset_rot: Quat = field(default_factory=Quat.identity)
    deposited: bool = False

    def copy(self) -> "ObjectState":
        return replace(self)


@dataclass
class WorldState:
    scene: SceneInstance
    model: RobotModel
    config: SimConfig
    tick: int = 0
    base_x: float = 0.0
    base_z: float = 0.0
    base_yaw: float = 0.0
    body_angles: np.ndarray = None
    body_velocities: np.ndarray = None
    hand_angles: np.ndarray = None  # left 6 then right 6
    wrist: dict = None  # side -> Quat, current hand orientation targets
    objects: list[ObjectState] = None

    @property
    def time(self) -> float:
        return self.tick * self.config.dt

    @staticmethod
    def from_scene(scene: SceneInstance, model: RobotModel, config: SimConfig) -> "WorldState":
        angles = np.zeros(29)
        angles[ARM_LEFT_SLICE] = model.arms["left"].home_joints
        angles[ARM_RIGHT_SLICE] = model.arms["right"].home_joints
        objects = [
            ObjectState(
                object_id=o.object_id,
                spec=o.spec,
                center=o.aabb.center(),
                orientation=o.orientation,
                aabb=o.aabb,
                pose_tag=o.pose_tag,
            )
            for o in scene.objects
            if o.interactable
        ]
        x, z, yaw = scene.robot_start
        return WorldState(
            scene=scene,
            model=model,
            config=config,
            base_x=x,
            base_z=z,
            base_yaw=yaw,
            body_angles=angles,
            body_velocities=np.zeros(29),
            hand_angles=np.zeros(12),
            wrist={"left": Quat.identity(), "right": Quat.identity()},
            objects=objects,
        )

    def copy(self) -> "WorldState":
        return WorldState(
            scene=self.scene,
            model=self.model,
            config=self.config,
            tick=self.tick,
            base_x=self.base_x,
            base_z=self.base_z,
            base_yaw=self.base_yaw,
            body_angles=self.body_angles.copy(),
            body_velocities=self.body_velocities.copy(),
            hand_angles=self.hand_angles.copy(),
            wrist=dict(self.wrist),
            objects=[o.copy() for o in self.objects],
        )

    # -- frames ------------------------------------------------------------

    def base_forward(self) -> Vec3:
        return Vec3(-math.sin(self.base_yaw), 0.0, math.cos(self.base_yaw))

    def base_rotation(self) -> Quat:
        return Quat.from_yaw(self.base_yaw)

    def to_world(self, p_base: Vec3) -> Vec3:
        return self.base_rotation().rotate(p_base) + Vec3(self.base_x, 0.0, self.base_z)

    def to_base(self, p_world: Vec3) -> Vec3:
        local = p_world - Vec3(self.base_x, 0.0, self.base_z)
        return self.base_rotation().inverse().rotate(local)

    def arm_joints(self, side: str) -> np.ndarray:
        sl = ARM_RIGHT_SLICE if side == "right" else ARM_LEFT_SLICE
        return self.body_angles[sl]

    def hand_joint_angles(self, side: str) -> np.ndarray:
        return self.hand_angles[6:12] if side == "right" else self.hand_angles[0:6]

    def ee_pose(self, side: str) -> tuple[Vec3, Quat]:
        """World pose of the hand: FK of the current arm joints plus the wrist."""
        arm = self.model.arms[side]
        local = Vec3.from_array(arm.fk(self.arm_joints(side)))
        return self.to_world(local), self.base_rotation() * self.wrist[side]

    def gripper_closed(self, side: str) -> bool:
        angles = self.hand_joint_angles(side)
        grasp = self.model.grasp_angles(side)
        return float(np.mean(angles)) >= 0.8 * float(np.mean(grasp))

    def held_object(self, side: str) -> ObjectState | None:
        for obj in self.objects:
            if obj.attached_to == side:
                return obj
        return None


def step(world: WorldState, chassis: ChassisCommand, joint_targets: np.ndarray,
         triggers: tuple[float, float], wrist: dict, dt: float) -> WorldState:
    """Advance one tick in place: base, joints, grippers, attachments, clock.

    ``joint_targets`` are the already-smoothed 29 body joint commands;
    ``triggers`` is (left, right); ``wrist`` maps side to the commanded hand
    orientation. Returns the same WorldState for chaining.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cfg = world.config
    v = max(-cfg.v_max, min(cfg.v_max, chassis.v))
    w = max(-cfg.w_max, min(cfg.w_max, chassis.w))
    fwd = world.base_forward()
    world.base_x += v * fwd.x * dt
    world.base_z += v * fwd.z * dt
    world.base_yaw += w * dt
    b = world.scene.bounds
    m = cfg.wall_margin
    world.base_x = min(max(world.base_x, b.x_min + m), b.x_max - m)
    world.base_z = min(max(world.base_z, b.z_min + m), b.z_max - m)

    world.body_angles, world.body_velocities = drive_joints(
        world.body_angles, world.body_velocities, joint_targets, world.model, dt
    )
    world.hand_angles[0:6] = step_gripper(
        world.hand_angles[0:6], triggers[0], world.model, "left", dt
    )
    world.hand_angles[6:12] = step_gripper(
        world.hand_angles[6:12], triggers[1], world.model, "right", dt
    )
    world.wrist = {"left": wrist["left"], "right": wrist["right"]}

    for side in ("left", "right"):
        held = world.held_object(side)
        if held is not None:
            pos, rot = world.ee_pose(side)
            held.center = pos + rot.rotate(held.grasp_offset_pos)
            held.orientation = rot * held.grasp_offset_rot

    world.tick += 1
    return world


def try_grasp(world: WorldState, side: str) -> WorldState:
    """Attach the nearest interactable object if the closed hand is near enough.

    Grasping additionally requires the hand's approach axis to be within the
    configured cone of the object's up axis, which is what makes lying (Hard)
    trash demand a wrist reorientation first.
    """
    if world.held_object(side) is not None or not world.gripper_closed(side):
        return world
    pos, rot = world.ee_pose(side)
    approach = rot.rotate(Vec3(0.0, 1.0, 0.0))
    cos_limit = math.cos(math.radians(world.config.approach_cone_deg))
    best, best_dist = None, world.config.grasp_radius
    for obj in world.objects:
        if obj.attached_to is not None or obj.deposited:
            continue
        dist = (obj.center - pos).norm()
        if dist > best_dist:
            continue
        up = obj.orientation.rotate(Vec3(0.0, 1.0, 0.0))
        if abs(approach.dot(up)) < cos_limit:
            continue
        best, best_dist = obj, dist
    if best is not None:
        best.attached_to = side
        inv = rot.inverse()
        best.grasp_offset_pos = inv.rotate(best.center - pos)
        best.grasp_offset_rot = inv * best.orientation
    return world


def release(world: WorldState, side: str) -> WorldState:
    """Detach the held object and settle it: into a bin if over its trigger
    footprint, otherwise onto the highest support under it. No-op if empty."""
    obj = world.held_object(side)
    if obj is None:
        return world
    obj.attached_to = None
    x, z = obj.center.x, obj.center.z
    for trig in world.scene.goal_triggers:
        vol = trig.volume
        if vol.min.x <= x <= vol.max.x and vol.min.z <= z <= vol.max.z \
                and obj.center.y >= vol.min.y:
            obj.aabb = settle_aabb_centered(obj.spec, x, z, obj.orientation,
                                            vol.min.y + BIN_FLOOR_OFFSET)
            obj.center = obj.aabb.center()
            return world
    b = world.scene.bounds
    x = min(max(x, b.x_min), b.x_max)
    z = min(max(z, b.z_min), b.z_max)
    height = raycast_down(x, z, world.scene.surfaces)
    if height is None:
        height = 0.0
    obj.aabb = settle_aabb_centered(obj.spec, x, z, obj.orientation, height)
    obj.center = obj.aabb.center()
    return world


def check_goal(world: WorldState) -> list[str]:
    """Newly deposited trash ids; each object reports at most once."""
    newly = []
    for obj in world.objects:
        if obj.deposited:
            continue
        if obj.attached_to is not None and not world.config.count_held:
            continue
        for trig in world.scene.goal_triggers:
            if trig.volume.contains_point(obj.center):
                obj.deposited = True
                newly.append(obj.object_id)
                break
    return newly


def remaining_trash(world: WorldState) -> int:
    return sum(1 for o in world.objects if not o.deposited)
