"""Deterministic math substrate: vectors, quaternions, boxes, ray casts, RNG streams.

Conventions used across the package:
  - right-handed frame, y is up; the ground plane is XZ
  - x points to the robot's right, z points forward (at zero yaw)
  - all angles in radians internally; degree-valued config constants are
    converted once at parse time
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero vector")
        return self.scale(1.0 / n)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))

    @staticmethod
    def zero() -> "Vec3":
        return Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Quat:
    """Unit quaternion, scalar-first (w, x, y, z)."""

    w: float
    x: float
    y: float
    z: float

    def __mul__(self, other: "Quat") -> "Quat":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ).normalized()

    def conjugate(self) -> "Quat":
        return Quat(self.w, -self.x, -self.y, -self.z)

    def inverse(self) -> "Quat":
        # unit quaternion: inverse == conjugate
        return self.conjugate()

    def norm(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def normalized(self) -> "Quat":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize zero quaternion")
        return Quat(self.w / n, self.x / n, self.y / n, self.z / n)

    def rotate(self, v: Vec3) -> Vec3:
        # q v q*  via the expanded cross-product form
        u = Vec3(self.x, self.y, self.z)
        uv = u.cross(v)
        uuv = u.cross(uv)
        return v + uv.scale(2.0 * self.w) + uuv.scale(2.0)

    def to_list(self) -> list[float]:
        return [self.w, self.x, self.y, self.z]

    def to_rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    @staticmethod
    def identity() -> "Quat":
        return Quat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle: float) -> "Quat":
        a = axis.normalized()
        half = 0.5 * angle
        s = math.sin(half)
        return Quat(math.cos(half), a.x * s, a.y * s, a.z * s).normalized()

    @staticmethod
    def from_yaw(yaw: float) -> "Quat":
        """Rotation about +y that turns +z toward -x for positive yaw (CCW from above)."""
        return Quat.from_axis_angle(Vec3(0.0, 1.0, 0.0), -yaw)

    @staticmethod
    def from_euler_xyz(rx: float, ry: float, rz: float) -> "Quat":
        """Intrinsic x-y-z composition: R = Rx(rx) * Ry(ry) * Rz(rz)."""
        qx = Quat.from_axis_angle(Vec3(1, 0, 0), rx)
        qy = Quat.from_axis_angle(Vec3(0, 1, 0), ry)
        qz = Quat.from_axis_angle(Vec3(0, 0, 1), rz)
        return qx * qy * qz

    def to_euler_xyz(self) -> tuple[float, float, float]:
        """Decompose into intrinsic x-y-z angles (inverse of from_euler_xyz)."""
        m = self.to_rotation_matrix()
        # R = Rx Ry Rz; m[0,2] = sin(ry)
        sy = max(-1.0, min(1.0, m[0, 2]))
        ry = math.asin(sy)
        if abs(sy) < 1.0 - 1e-9:
            rx = math.atan2(-m[1, 2], m[2, 2])
            rz = math.atan2(-m[0, 1], m[0, 0])
        else:
            # gimbal lock: fold all remaining rotation into rx
            rx = math.atan2(m[2, 1], m[1, 1])
            rz = 0.0
        return rx, ry, rz


def clamp_incremental_rotation(delta: Quat, limit_deg: float) -> Quat:
    """Clamp a rotation increment to +-limit_deg per intrinsic x-y-z Euler axis."""
    if limit_deg <= 0:
        raise ValueError("limit_deg must be positive")
    limit = math.radians(limit_deg)
    rx, ry, rz = delta.to_euler_xyz()
    cx = max(-limit, min(limit, rx))
    cy = max(-limit, min(limit, ry))
    cz = max(-limit, min(limit, rz))
    return Quat.from_euler_xyz(cx, cy, cz)


@dataclass(frozen=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValueError("Aabb min must be <= max componentwise")

    def translated(self, offset: Vec3) -> "Aabb":
        return Aabb(self.min + offset, self.max + offset)

    def contains_point(self, p: Vec3) -> bool:
        return (
            self.min.x <= p.x <= self.max.x
            and self.min.y <= p.y <= self.max.y
            and self.min.z <= p.z <= self.max.z
        )

    def center(self) -> Vec3:
        return Vec3(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
            0.5 * (self.min.z + self.max.z),
        )


def aabb_overlap(a: Aabb, b: Aabb) -> bool:
    """True iff the interiors intersect; shared faces/edges do not count."""
    return (
        a.min.x < b.max.x
        and b.min.x < a.max.x
        and a.min.y < b.max.y
        and b.min.y < a.max.y
        and a.min.z < b.max.z
        and b.min.z < a.max.z
    )


@dataclass(frozen=True)
class SupportSurface:
    """Horizontal rectangle at a fixed height, used for downward ray casts."""

    x_min: float
    z_min: float
    x_max: float
    z_max: float
    height: float

    def contains(self, x: float, z: float) -> bool:
        return self.x_min <= x <= self.x_max and self.z_min <= z <= self.z_max


def raycast_down(x: float, z: float, surfaces: list[SupportSurface]) -> float | None:
    """Highest surface height whose rectangle contains (x, z); None if none does.

    Callers include the room floor (height 0) in `surfaces`, so a None return
    means the point is outside the room.
    """
    best = None
    for s in surfaces:
        if s.contains(x, z) and (best is None or s.height > best):
            best = s.height
    return best


class RngStream:
    """Seedable, label-split random stream.

    Two streams built from the same (seed, label) produce identical sequences
    on any platform; distinct labels give statistically independent streams.
    Splitting is cheap, so every subsystem takes its own labeled substream and
    draws from it without perturbing any other subsystem.
    """

    def __init__(self, seed: int, label: str = "root"):
        self.seed = int(seed)
        self.label = label
        digest = hashlib.blake2b(
            label.encode("utf-8"), digest_size=16, key=b"binpick-rng"
        ).digest()
        entropy = [self.seed & 0xFFFFFFFFFFFFFFFF] + [
            int.from_bytes(digest[i : i + 8], "little") for i in (0, 8)
        ]
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def split(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{label}")

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return float(self._gen.uniform(lo, hi))

    def uniform_int(self, lo: int, hi: int) -> int:
        """Uniform integer in the closed range [lo, hi]."""
        return int(self._gen.integers(lo, hi + 1))

    def choice(self, n: int) -> int:
        return int(self._gen.integers(0, n))

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        return float(self._gen.normal(mu, sigma))
