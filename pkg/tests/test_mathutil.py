import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binpick.mathutil import (
    Aabb,
    Quat,
    RngStream,
    SupportSurface,
    Vec3,
    aabb_overlap,
    clamp_incremental_rotation,
    raycast_down,
)

finite = st.floats(min_value=-100, max_value=100, allow_nan=False)


def box(x0, y0, z0, x1, y1, z1):
    return Aabb(Vec3(x0, y0, z0), Vec3(x1, y1, z1))


class TestAabbOverlap:
    def test_disjoint(self):
        assert not aabb_overlap(box(0, 0, 0, 1, 1, 1), box(2, 0, 0, 3, 1, 1))

    def test_touching_faces_do_not_overlap(self):
        assert not aabb_overlap(box(0, 0, 0, 1, 1, 1), box(1, 0, 0, 2, 1, 1))

    def test_interior_intersection(self):
        assert aabb_overlap(box(0, 0, 0, 1, 1, 1), box(0.5, 0.5, 0.5, 2, 2, 2))

    def test_invalid_box_rejected(self):
        with pytest.raises(ValueError):
            box(1, 0, 0, 0, 1, 1)

    @given(st.lists(finite, min_size=12, max_size=12))
    def test_symmetric(self, vals):
        a = Aabb(
            Vec3(*(min(vals[i], vals[i + 3]) for i in range(3))),
            Vec3(*(max(vals[i], vals[i + 3]) for i in range(3))),
        )
        b = Aabb(
            Vec3(*(min(vals[i + 6], vals[i + 9]) for i in range(3))),
            Vec3(*(max(vals[i + 6], vals[i + 9]) for i in range(3))),
        )
        assert aabb_overlap(a, b) == aabb_overlap(b, a)


class TestRaycastDown:
    FLOOR = SupportSurface(-5, -5, 5, 5, 0.0)
    TABLE = SupportSurface(1, 1, 2, 2, 0.75)

    def test_bare_floor(self):
        assert raycast_down(0.0, 0.0, [self.FLOOR, self.TABLE]) == 0.0

    def test_highest_support_wins(self):
        assert raycast_down(1.5, 1.5, [self.FLOOR, self.TABLE]) == 0.75

    def test_outside_room_is_none(self):
        assert raycast_down(10.0, 10.0, [self.FLOOR, self.TABLE]) is None

    def test_monotone_in_stacking(self):
        base = raycast_down(1.5, 1.5, [self.FLOOR])
        shelf = SupportSurface(1, 1, 2, 2, 1.5)
        stacked = raycast_down(1.5, 1.5, [self.FLOOR, self.TABLE, shelf])
        assert stacked >= base


angle = st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False)


class TestQuat:
    def test_rotate_matches_matrix(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            q = Quat(*rng.normal(size=4)).normalized()
            v = Vec3(*rng.normal(size=3))
            expected = q.to_rotation_matrix() @ v.to_array()
            got = q.rotate(v)
            assert np.allclose(expected, got.to_array(), atol=1e-12)

    def test_unit_norm_over_10k_compositions(self):
        rng = np.random.default_rng(11)
        q = Quat.identity()
        for _ in range(10_000):
            q = q * Quat(*rng.normal(size=4)).normalized()
            assert abs(q.norm() - 1.0) < 1e-6

    @given(angle, angle, angle)
    @settings(max_examples=200)
    def test_euler_round_trip(self, rx, ry, rz):
        # restrict ry to the asin principal range where the decomposition is unique
        ry = max(-1.4, min(1.4, ry))
        q = Quat.from_euler_xyz(rx, ry, rz)
        ex, ey, ez = q.to_euler_xyz()
        q2 = Quat.from_euler_xyz(ex, ey, ez)
        # same rotation up to global sign
        dot = abs(q.w * q2.w + q.x * q2.x + q.y * q2.y + q.z * q2.z)
        assert dot > 1 - 1e-9

    def test_yaw_turns_forward_vector(self):
        fwd = Quat.from_yaw(0.5).rotate(Vec3(0, 0, 1))
        assert math.isclose(fwd.x, -math.sin(0.5), abs_tol=1e-12)
        assert math.isclose(fwd.z, math.cos(0.5), abs_tol=1e-12)


class TestClampIncrementalRotation:
    def test_identity_unchanged(self):
        q = clamp_incremental_rotation(Quat.identity(), 45)
        assert abs(q.w - 1) < 1e-9

    def test_single_axis_clamped_to_limit(self):
        q60 = Quat.from_axis_angle(Vec3(1, 0, 0), math.radians(60))
        clamped = clamp_incremental_rotation(q60, 45)
        expected = Quat.from_axis_angle(Vec3(1, 0, 0), math.radians(45))
        assert abs(clamped.w - expected.w) < 1e-9
        assert abs(clamped.x - expected.x) < 1e-9

    def test_inside_limit_unchanged(self):
        q30 = Quat.from_axis_angle(Vec3(0, 1, 0), math.radians(30))
        clamped = clamp_incremental_rotation(q30, 45)
        for a, b in zip(clamped.to_list(), q30.to_list()):
            assert abs(a - b) < 1e-6

    def test_rejects_nonpositive_limit(self):
        with pytest.raises(ValueError):
            clamp_incremental_rotation(Quat.identity(), 0)

    @given(angle, angle, angle)
    @settings(max_examples=200)
    def test_result_always_within_limit(self, rx, ry, rz):
        q = Quat.from_euler_xyz(rx, ry, rz)
        clamped = clamp_incremental_rotation(q, 45)
        ex, ey, ez = clamped.to_euler_xyz()
        lim = math.radians(45) + 1e-9
        assert abs(ex) <= lim and abs(ey) <= lim and abs(ez) <= lim


class TestRngStream:
    def test_identical_seed_label_identical_draws(self):
        a = RngStream(42, "x")
        b = RngStream(42, "x")
        assert [a.uniform() for _ in range(10_000)] == [b.uniform() for _ in range(10_000)]

    def test_different_labels_differ(self):
        a = RngStream(42, "x")
        b = RngStream(42, "y")
        assert [a.uniform() for _ in range(10)] != [b.uniform() for _ in range(10)]

    def test_split_is_deterministic_and_isolated(self):
        root = RngStream(7)
        s1 = root.split("scene")
        _ = [root.split("other").uniform() for _ in range(5)]  # unrelated draws
        s2 = RngStream(7).split("scene")
        assert [s1.uniform() for _ in range(100)] == [s2.uniform() for _ in range(100)]

    def test_uniform_int_bounds(self):
        s = RngStream(1, "bounds")
        draws = {s.uniform_int(1, 5) for _ in range(1000)}
        assert draws == {1, 2, 3, 4, 5}
