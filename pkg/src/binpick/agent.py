"""Deterministic scripted operator: completes episodes without a human.

Per trash item the agent parks the base beside the supporting table (waypoints
with simple AABB detours), clutch-drags the right IK target onto the object,
closes the gripper, carries the item to a bin, centers it over the trigger and
releases. In Hard mode it reorients the wrist first so the approach axis meets
the lying object's up axis, and unwinds the wrist again after releasing.

The agent only observes WorldState snapshots. To aim the clutch it replays its
own emitted inputs through the same pure control functions the session uses,
which gives it an exact mirror of the session's clutch anchors and targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .control import (
    RIGHT_CLAMP_BOX,
    ClutchState,
    ControlInput,
    HandInput,
    IKTarget,
    update_clutch,
    update_wrist,
)
from .mathutil import Quat, RngStream, Vec3
from .session import EpisodeResult, SessionCore
from .task import EpisodePhase
from .world import WorldState

OBSTACLE_INFLATION = 0.38
PARK_POS_TOL = 0.025
PARK_YAW_TOL = 0.04
DRAG_SPEED = 0.8  # m/s synthetic controller motion while reaching
DESCEND_SPEED = 0.3  # m/s precise descent onto lying objects
ALIGN_SPEED = 0.25  # m/s while centering over the bin
REORIENT_TICKS = 60
SETTLE_TICKS = 6
ITEM_TICK_BUDGET = 3000


@dataclass
class AgentConfig:
    noise_sigma: float = 0.0
    seed: int = 0


@dataclass
class AgentPlan:
    phase: str = "select_item"
    item_id: str | None = None
    waypoints: list[tuple[float, float]] = field(default_factory=list)
    goal_yaw: float = 0.0
    controller_pos: Vec3 = field(default_factory=Vec3.zero)
    controller_rot: Quat = field(default_factory=Quat.identity)
    wrist_goal: Quat | None = None
    reorient_tick: int = 0
    reach_stage: int = 0
    pending_unwind: bool = False
    settle_count: int = 0
    item_ticks: int = 0
    failed: bool = False


def _wrap(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _bearing(dx: float, dz: float) -> float:
    # heading whose forward vector (-sin yaw, cos yaw) points along (dx, dz)
    return math.atan2(-dx, dz)


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def _quat_angle(q: Quat) -> float:
    return 2.0 * math.acos(_clamp(abs(q.w), 0.0, 1.0))


def _partial_rotation(q: Quat, t: float) -> Quat:
    """Fraction t of the rotation q (identity at t=0)."""
    w = _clamp(q.w, -1.0, 1.0)
    angle = 2.0 * math.acos(abs(w))
    if angle < 1e-9:
        return Quat.identity()
    sign = 1.0 if w >= 0 else -1.0
    s = math.sqrt(max(1e-18, 1.0 - w * w))
    axis = Vec3(sign * q.x / s, sign * q.y / s, sign * q.z / s)
    return Quat.from_axis_angle(axis, angle * _clamp(t, 0.0, 1.0))


class ScriptedAgent:
    def __init__(self, world: WorldState, config: AgentConfig | None = None):
        self.config = config or AgentConfig()
        self.plan = AgentPlan()
        self._noise = RngStream(self.config.seed, "agent-noise")
        self.home = Vec3.from_array(world.model.arms["right"].home_position)
        self._static_boxes = [
            o.aabb for o in world.scene.objects
            if o.category in ("table", "furniture", "trash_bin", "decoration")
        ]
        # exact mirror of the session's right-hand control state, maintained by
        # replaying our own emitted inputs through the same pure functions
        self.mirror_clutch = ClutchState()
        self.mirror_target = IKTarget()

    # -- geometry helpers ---------------------------------------------------

    def _segment_blocked(self, a, b, box) -> bool:
        """2D slab test of segment a->b against an inflated AABB footprint."""
        x0, z0 = a
        x1, z1 = b
        lo = (box.min.x - OBSTACLE_INFLATION, box.min.z - OBSTACLE_INFLATION)
        hi = (box.max.x + OBSTACLE_INFLATION, box.max.z + OBSTACLE_INFLATION)
        t_min, t_max = 0.0, 1.0
        for p0, d, lo_i, hi_i in ((x0, x1 - x0, lo[0], hi[0]), (z0, z1 - z0, lo[1], hi[1])):
            if abs(d) < 1e-12:
                if p0 < lo_i or p0 > hi_i:
                    return False
                continue
            ta = (lo_i - p0) / d
            tb = (hi_i - p0) / d
            if ta > tb:
                ta, tb = tb, ta
            t_min = max(t_min, ta)
            t_max = min(t_max, tb)
            if t_min > t_max:
                return False
        return True

    def _inside_inflated(self, p, box) -> bool:
        return (box.min.x - OBSTACLE_INFLATION <= p[0] <= box.max.x + OBSTACLE_INFLATION
                and box.min.z - OBSTACLE_INFLATION <= p[1] <= box.max.z + OBSTACLE_INFLATION)

    def _plan_path(self, start, goal) -> list[tuple[float, float]]:
        """Straight line with corner detours around blocking footprints."""
        boxes = [b for b in self._static_boxes if not self._inside_inflated(goal, b)
                 and not self._inside_inflated(start, b)]
        path = [goal]
        current = start
        for _ in range(4):
            blocker = next((b for b in boxes if self._segment_blocked(current, path[0], b)), None)
            if blocker is None:
                break
            m = OBSTACLE_INFLATION + 0.12
            corners = [
                (blocker.min.x - m, blocker.min.z - m),
                (blocker.min.x - m, blocker.max.z + m),
                (blocker.max.x + m, blocker.min.z - m),
                (blocker.max.x + m, blocker.max.z + m),
            ]

            def detour_cost(c):
                return math.dist(current, c) + math.dist(c, path[0])

            corners.sort(key=detour_cost)
            chosen = next(
                (c for c in corners if not self._segment_blocked(current, c, blocker)),
                corners[0],
            )
            path.insert(0, chosen)
            current = chosen
        return path

    def _stand_pose(self, world: WorldState, focus: Vec3, avoid_box) -> tuple[float, float, float]:
        """Base pose placing `focus` at the right hand's home (x, z) offset.

        Tries the four cardinal approach yaws; keeps poses inside the room and
        outside the avoided footprint, preferring the shortest travel.
        """
        hx, hz = self.home.x, self.home.z
        b = world.scene.bounds
        margin = world.config.wall_margin + 0.02
        candidates = []
        for yaw in (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi):
            rot = Quat.from_yaw(yaw)
            off = rot.rotate(Vec3(hx, 0.0, hz))
            px, pz = focus.x - off.x, focus.z - off.z
            inside_room = (b.x_min + margin <= px <= b.x_max - margin
                           and b.z_min + margin <= pz <= b.z_max - margin)
            outside_box = avoid_box is None or not (
                avoid_box.min.x - 0.05 <= px <= avoid_box.max.x + 0.05
                and avoid_box.min.z - 0.05 <= pz <= avoid_box.max.z + 0.05
            )
            travel = math.dist((world.base_x, world.base_z), (px, pz))
            candidates.append((not (inside_room and outside_box), travel, px, pz, yaw))
        candidates.sort(key=lambda t: (t[0], t[1]))
        _, _, px, pz, yaw = candidates[0]
        return px, pz, _wrap(yaw)

    def _drive(self, world: WorldState, goal_x, goal_z, goal_yaw) -> tuple[float, float, bool]:
        """(stick_x, stick_y, parked) toward a pose; plain P controller."""
        dx, dz = goal_x - world.base_x, goal_z - world.base_z
        dist = math.hypot(dx, dz)
        cfg = world.config
        if dist > PARK_POS_TOL:
            bearing = _bearing(dx, dz)
            err = _wrap(bearing - world.base_yaw)
            if abs(err) > 0.35:
                return -_clamp(3.0 * err / cfg.w_max, -1, 1), 0.0, False
            sy = _clamp(2.5 * dist / cfg.v_max, -1, 1)
            sx = -_clamp(2.5 * err / cfg.w_max, -1, 1)
            return sx, sy, False
        err = _wrap(goal_yaw - world.base_yaw)
        if abs(err) > PARK_YAW_TOL:
            return -_clamp(3.0 * err / cfg.w_max, -1, 1), 0.0, False
        return 0.0, 0.0, True

    # -- clutch aiming via the mirrored control state -------------------------

    def _drag_toward_target(self, world: WorldState, desired: Vec3, speed: float) -> bool:
        """Move the synthetic controller so the session's IK target heads for
        `desired` (relative-to-home coordinates). True once in position."""
        st = self.mirror_clutch
        if not st.engaged:
            return False  # anchors form on the engage tick; try next tick
        ctrl_goal = st.anchor_controller_pos + (desired - st.anchor_target)
        delta = ctrl_goal - self.plan.controller_pos
        dist = delta.norm()
        step = speed * world.config.dt
        if dist <= step:
            self.plan.controller_pos = ctrl_goal
            return True
        self.plan.controller_pos = self.plan.controller_pos + delta.scale(step / dist)
        return False

    def _desired_wrist(self, world: WorldState, obj) -> Quat:
        """Absolute wrist pose tilting the approach axis toward the object's up."""
        up_world = obj.orientation.rotate(Vec3(0.0, 1.0, 0.0))
        up_base = world.base_rotation().inverse().rotate(up_world)
        y = Vec3(0.0, 1.0, 0.0)
        cosang = _clamp(y.dot(up_base), -1.0, 1.0)
        angle = math.acos(abs(cosang))
        if angle < math.radians(25):
            return Quat.identity()
        target = up_base if cosang >= 0 else up_base.scale(-1.0)
        axis = y.cross(target)
        if axis.norm() < 1e-9:
            return Quat.identity()
        tilt = min(angle, math.radians(44.0))
        return Quat.from_axis_angle(axis.normalized(), tilt)

    def _steer_wrist(self, wrist_goal: Quat) -> bool:
        """Rotate the controller so the session wrist converges to wrist_goal.

        The wrist increment is relative to the engage anchors, so the needed
        controller pose is (fraction of goal-minus-anchor) composed onto the
        anchored controller rotation. True when the mirrored wrist is close.
        """
        plan = self.plan
        st = self.mirror_clutch
        if not st.engaged:
            return False
        if _quat_angle(wrist_goal * self.mirror_target.wrist.inverse()) < math.radians(6):
            return True
        increment_goal = wrist_goal * st.anchor_wrist.inverse()
        plan.reorient_tick += 1
        t = min(1.0, plan.reorient_tick / REORIENT_TICKS)
        plan.controller_rot = _partial_rotation(increment_goal, t) * st.anchor_controller_rot
        return False

    # -- misc ------------------------------------------------------------------

    def _object(self, world: WorldState, object_id: str):
        for o in world.objects:
            if o.object_id == object_id:
                return o
        return None

    def _nearest_trigger(self, world: WorldState):
        return min(
            world.scene.goal_triggers,
            key=lambda t: math.dist(
                (world.base_x, world.base_z),
                (t.volume.center().x, t.volume.center().z),
            ),
        )

    # -- main policy -------------------------------------------------------------

    def step(self, world: WorldState) -> ControlInput:
        """Emit the next ControlInput; advances the internal plan."""
        plan = self.plan
        plan.item_ticks += 1
        if plan.item_ticks > ITEM_TICK_BUDGET:
            plan.failed = True
        if plan.failed or plan.phase == "done":
            return self._emit(0.0, 0.0, clutch=False, trigger=0.0)

        stick_x = stick_y = 0.0
        clutch = False
        trigger = 0.0

        if plan.phase == "select_item":
            remaining = [o for o in world.objects if not o.deposited and o.attached_to is None]
            if not remaining:
                plan.phase = "done"
                return self._emit(0.0, 0.0, clutch=False, trigger=0.0)
            obj = min(remaining, key=lambda o: math.dist(
                (world.base_x, world.base_z), (o.center.x, o.center.z)))
            plan.item_id = obj.object_id
            plan.item_ticks = 0
            plan.reorient_tick = 0
            plan.wrist_goal = None
            table = next(
                (t for t in world.scene.tables()
                 if t.aabb.min.x - 0.3 <= obj.center.x <= t.aabb.max.x + 0.3
                 and t.aabb.min.z - 0.3 <= obj.center.z <= t.aabb.max.z + 0.3),
                None,
            )
            px, pz, yaw = self._stand_pose(world, obj.center, table.aabb if table else None)
            plan.goal_yaw = yaw
            plan.waypoints = self._plan_path((world.base_x, world.base_z), (px, pz))
            plan.phase = "navigate_to_table"

        obj = self._object(world, plan.item_id) if plan.item_id else None

        if plan.phase == "navigate_to_table":
            stick_x, stick_y, parked = self._follow_waypoints(world)
            if plan.pending_unwind:
                # unwind the wrist from the previous item while driving
                clutch = True
                if _quat_angle(self.mirror_target.wrist) < math.radians(6) \
                        or self._steer_wrist(Quat.identity()):
                    plan.pending_unwind = False
                    clutch = False
            if parked:
                plan.phase = "reach"
                plan.reorient_tick = 0
                plan.reach_stage = 0

        elif plan.phase == "reach":
            clutch = True
            if obj is None:
                plan.phase = "select_item"
            else:
                if plan.wrist_goal is None:
                    plan.wrist_goal = self._desired_wrist(world, obj)
                oriented = self._steer_wrist(plan.wrist_goal)
                rel = world.to_base(obj.center) - self.home
                needs_hover = plan.wrist_goal.w < 0.9999  # lying object
                if needs_hover and plan.reach_stage == 0:
                    # hover above the object while the wrist reorients, then
                    # descend slowly for a precise side grasp
                    hover = Vec3(rel.x, rel.y + 0.12, rel.z)
                    arrived = self._drag_toward_target(world, hover, DRAG_SPEED)
                    if arrived and oriented:
                        plan.reach_stage = 1
                else:
                    speed = DESCEND_SPEED if needs_hover else DRAG_SPEED
                    arrived = self._drag_toward_target(world, rel, speed)
                    ee_pos, _ = world.ee_pose("right")
                    if arrived and oriented \
                            and (obj.center - ee_pos).norm() < 0.75 * world.config.grasp_radius:
                        plan.phase = "grasp"

        elif plan.phase == "grasp":
            clutch = True
            trigger = 1.0
            if obj is not None:
                self._drag_toward_target(world, world.to_base(obj.center) - self.home,
                                         DRAG_SPEED)
            if obj is not None and obj.attached_to == "right":
                plan.phase = "lift"
                plan.settle_count = 0

        elif plan.phase == "lift":
            clutch = True
            trigger = 1.0
            lifted = self._drag_toward_target(world, Vec3(0.0, 0.3, 0.0), DRAG_SPEED)
            plan.settle_count += 1
            if lifted and plan.settle_count >= SETTLE_TICKS:
                trig = self._nearest_trigger(world)
                c = trig.volume.center()
                bin_obj = next(
                    (o for o in world.scene.bins() if o.object_id == trig.bin_id), None)
                px, pz, yaw = self._stand_pose(world, c, bin_obj.aabb if bin_obj else None)
                plan.goal_yaw = yaw
                plan.waypoints = self._plan_path((world.base_x, world.base_z), (px, pz))
                plan.phase = "navigate_to_bin"

        elif plan.phase == "navigate_to_bin":
            trigger = 1.0
            stick_x, stick_y, parked = self._follow_waypoints(world)
            if parked:
                plan.phase = "align"
                plan.settle_count = 0

        elif plan.phase == "align":
            clutch = True
            trigger = 1.0
            if self._align_over_trigger(world, obj):
                plan.phase = "release"
                plan.settle_count = 0

        elif plan.phase == "release":
            trigger = 0.0
            clutch = True
            if obj is None or obj.deposited or obj.attached_to is None:
                plan.settle_count += 1
                if plan.settle_count >= SETTLE_TICKS:
                    plan.pending_unwind = _quat_angle(self.mirror_target.wrist) \
                        >= math.radians(6)
                    plan.reorient_tick = 0
                    plan.phase = "select_item"
                    plan.item_ticks = 0

        return self._emit(stick_x, stick_y, clutch=clutch, trigger=trigger)

    def _emit(self, sx: float, sy: float, clutch: bool, trigger: float) -> ControlInput:
        if self.config.noise_sigma > 0:
            sx += self._noise.normal(0.0, self.config.noise_sigma)
            sy += self._noise.normal(0.0, self.config.noise_sigma)
        right = HandInput(
            clutch=clutch,
            controller_pos=self.plan.controller_pos,
            controller_rot=self.plan.controller_rot,
            trigger=trigger,
        )
        inp = ControlInput(stick=(_clamp(sx, -1, 1), _clamp(sy, -1, 1)), right=right)
        # keep the mirror in lockstep with what the session will compute
        self.mirror_clutch, self.mirror_target = update_clutch(
            self.mirror_clutch, right, inp.camera_rot, self.mirror_target, RIGHT_CLAMP_BOX
        )
        wrist = update_wrist(self.mirror_clutch, right, self.mirror_target.wrist)
        self.mirror_target = IKTarget(self.mirror_target.position, wrist)
        return inp

    # -- phase mechanics -----------------------------------------------------

    def _follow_waypoints(self, world: WorldState) -> tuple[float, float, bool]:
        plan = self.plan
        if not plan.waypoints:
            return 0.0, 0.0, True
        while len(plan.waypoints) > 1 and math.dist(
                (world.base_x, world.base_z), plan.waypoints[0]) < 0.15:
            plan.waypoints.pop(0)
        gx, gz = plan.waypoints[0]
        if len(plan.waypoints) > 1:
            dx, dz = gx - world.base_x, gz - world.base_z
            sx, sy, _ = self._drive(world, gx, gz, _bearing(dx, dz))
            return sx, sy, False
        sx, sy, parked = self._drive(world, gx, gz, plan.goal_yaw)
        if parked:
            plan.waypoints = []
        return sx, sy, parked

    def _align_over_trigger(self, world: WorldState, obj) -> bool:
        plan = self.plan
        if obj is None or obj.attached_to != "right":
            plan.failed = True
            return False
        trig = self._nearest_trigger(world)
        c = trig.volume.center()
        half_x = 0.5 * (trig.volume.max.x - trig.volume.min.x)
        half_z = 0.5 * (trig.volume.max.z - trig.volume.min.z)
        tol = max(0.012, min(half_x, half_z) - 0.02)
        if math.hypot(c.x - obj.center.x, c.z - obj.center.z) <= tol:
            plan.settle_count += 1
            return plan.settle_count >= SETTLE_TICKS
        plan.settle_count = 0
        # steer the target by the object's world-frame offset, re-expressed in
        # the base frame (the target lives in base coordinates)
        err_world = Vec3(c.x - obj.center.x, 0.0, c.z - obj.center.z)
        err = world.base_rotation().inverse().rotate(err_world)
        desired = self.mirror_target.position + Vec3(err.x, 0.0, err.z)
        self._drag_toward_target(world, desired, ALIGN_SPEED)
        return False


def run_scripted_episode(session: SessionCore, agent_config: AgentConfig | None = None,
                         max_seconds: float = 120.0,
                         abort_at_tick: int | None = None) -> EpisodeResult | None:
    """Drive one episode to completion (or abort); returns None on failure."""
    agent = ScriptedAgent(session.world, agent_config)
    session.begin_episode()
    max_ticks = int(max_seconds / session.config.sim.dt)
    for _ in range(max_ticks):
        if abort_at_tick is not None and session.world.tick >= abort_at_tick:
            session.abort()
            return None
        inp = agent.step(session.world)
        session.apply_input(inp)
        events = session.tick()
        if events.completed is not None:
            return events.completed
        if agent.plan.failed:
            session.abort()
            return None
        if session.phase is not EpisodePhase.IN_PROGRESS:
            return None
    session.abort()
    return None
