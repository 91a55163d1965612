"""Exact 3-D rigid-motion algebra shared by every other module.

Conventions: lengths in millimeters, angles in degrees. A transform maps a
point as ``rotation @ p + translation``; composing ``a`` with ``b`` applies
``b`` first. All types are immutable values and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ORTHOGONALITY_TOL = 1e-9
UNIT_NORM_TOL = 1e-12


def _readonly(values, shape) -> np.ndarray:
    out = np.array(values, dtype=float).reshape(shape)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Point3:
    """A position in millimeters; every component must be finite."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"point component is not finite: {v!r}")

    @classmethod
    def from_array(cls, values) -> "Point3":
        a = np.asarray(values, dtype=float).reshape(3)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Proper rigid motion with an explicitly validated rotation.

    The rotation must be orthogonal to within ``ORTHOGONALITY_TOL`` and have
    determinant +1; construction fails otherwise. Drift is repaired only by
    :func:`compose`, and only once it exceeds the tolerance, so invariant
    violations stay observable instead of being silently hidden.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        r = _readonly(self.rotation, (3, 3))
        t = _readonly(self.translation, (3,))
        if not (np.isfinite(r).all() and np.isfinite(t).all()):
            raise ValueError("transform contains non-finite entries")
        drift = float(np.abs(r.T @ r - np.eye(3)).max())
        if drift > ORTHOGONALITY_TOL:
            raise ValueError(f"rotation is not orthogonal (drift {drift:.3e})")
        det = float(np.linalg.det(r))
        if abs(det - 1.0) > 1e-9:
            raise ValueError(f"rotation determinant {det!r} is not +1 (reflection?)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_rpy_deg(cls, rpy, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        r, p, y = (float(v) for v in rpy)
        return cls(rotation_from_rpy_deg(r, p, y), np.asarray(translation, dtype=float))

    def transform_points(self, points) -> np.ndarray:
        """Apply the motion to an (N, 3) array of row points."""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return compose(self, other)


@dataclass(frozen=True, eq=False)
class Line3:
    """Infinite line given by an anchor point and a unit direction."""

    anchor: Point3
    direction: np.ndarray

    def __post_init__(self) -> None:
        d = _readonly(self.direction, (3,))
        if not np.isfinite(d).all():
            raise ValueError("line direction is not finite")
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"line direction norm {n!r} is not 1")
        object.__setattr__(self, "direction", d)

    @classmethod
    def through(cls, anchor: Point3, direction) -> "Line3":
        """Build a line from any non-zero direction vector, normalizing it."""
        d = np.asarray(direction, dtype=float).reshape(3)
        n = float(np.linalg.norm(d))
        if n == 0.0:
            raise ValueError("line direction must be non-zero")
        if abs(n - 1.0) > UNIT_NORM_TOL:
            d = d / n
        return cls(anchor, d)

    def points_at(self, ts) -> np.ndarray:
        """Points anchor + t * direction for an array of parameters t."""
        ts = np.asarray(ts, dtype=float)
        return self.anchor.as_array() + ts[:, None] * self.direction


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered points together with the coordinate frame they live in.

    May be constructed empty; solvers that require points raise on use.
    """

    points: np.ndarray
    frame_label: str = ""

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError(f"point cloud must be (N, 3), got {p.shape}")
        if not np.isfinite(p).all():
            raise ValueError("point cloud contains non-finite coordinates")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.points.shape[0]


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Motion applying ``b`` first and then ``a``.

    The product rotation is re-orthonormalized via polar decomposition only
    when its drift exceeds ORTHOGONALITY_TOL.
    """
    r = a.rotation @ b.rotation
    if float(np.abs(r.T @ r - np.eye(3)).max()) > ORTHOGONALITY_TOL:
        r = nearest_rotation(r)
    return RigidTransform(r, a.rotation @ b.translation + a.translation)


def invert(t: RigidTransform) -> RigidTransform:
    """Inverse motion; compose(t, invert(t)) is the identity."""
    return RigidTransform(t.rotation.T, -(t.rotation.T @ t.translation))


def apply(t: RigidTransform, p: Point3) -> Point3:
    """Map a point: rotation @ p + translation."""
    return Point3.from_array(t.rotation @ p.as_array() + t.translation)


def _rotation_angle_rad(rel: np.ndarray) -> float:
    """Angle of a rotation matrix via atan2(sin, cos), which stays accurate
    both near 0 (where acos of the trace loses ~8 digits) and near pi."""
    w = np.array([rel[2, 1] - rel[1, 2], rel[0, 2] - rel[2, 0], rel[1, 0] - rel[0, 1]])
    s = float(np.linalg.norm(w)) / 2.0
    c = (float(np.trace(rel)) - 1.0) / 2.0
    return math.atan2(s, c)


def rotation_angle_between(a: RigidTransform, b: RigidTransform) -> float:
    """Geodesic angle, in degrees, of the relative rotation a * b^-1."""
    return math.degrees(_rotation_angle_rad(a.rotation @ b.rotation.T))


def translation_distance(a: RigidTransform, b: RigidTransform) -> float:
    """Euclidean distance between the two translations, in mm."""
    return float(np.linalg.norm(a.translation - b.translation))


def nearest_rotation(m) -> np.ndarray:
    """Closest proper rotation to a 3x3 matrix (polar projection)."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def skew(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def rotation_from_axis_angle_deg(axis, angle_deg: float) -> np.ndarray:
    """Rodrigues rotation about a (not necessarily unit) axis."""
    a = np.asarray(axis, dtype=float).reshape(3)
    n = float(np.linalg.norm(a))
    if n == 0.0:
        raise ValueError("rotation axis must be non-zero")
    a = a / n
    th = math.radians(angle_deg)
    k = skew(a)
    return np.eye(3) + math.sin(th) * k + (1.0 - math.cos(th)) * (k @ k)


def rotation_about_x(angle_deg: float) -> np.ndarray:
    return rotation_from_axis_angle_deg((1.0, 0.0, 0.0), angle_deg)


def rotation_about_y(angle_deg: float) -> np.ndarray:
    return rotation_from_axis_angle_deg((0.0, 1.0, 0.0), angle_deg)


def rotation_about_z(angle_deg: float) -> np.ndarray:
    return rotation_from_axis_angle_deg((0.0, 0.0, 1.0), angle_deg)


def rotation_from_rpy_deg(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rz(yaw) @ Ry(pitch) @ Rx(roll), angles in degrees."""
    return rotation_about_z(yaw) @ rotation_about_y(pitch) @ rotation_about_x(roll)


def rotation_to_rpy_deg(r) -> tuple[float, float, float]:
    """Roll/pitch/yaw (degrees) of a rotation, inverse of rotation_from_rpy_deg.

    Near the pitch = +-90 deg singularity only roll + yaw is determined; the
    convention here sets roll = 0 there.
    """
    r = np.asarray(r, dtype=float)
    sp = -r[2, 0]
    sp = min(1.0, max(-1.0, sp))
    pitch = math.asin(sp)
    if abs(abs(sp) - 1.0) < 1e-12:
        roll = 0.0
        yaw = math.atan2(-r[0, 1], r[1, 1])
    else:
        roll = math.atan2(r[2, 1], r[2, 2])
        yaw = math.atan2(r[1, 0], r[0, 0])
    return math.degrees(roll), math.degrees(pitch), math.degrees(yaw)


def rotation_to_rotvec_deg(r) -> np.ndarray:
    """Axis-angle vector (axis * angle, degrees) of a rotation matrix."""
    r = np.asarray(r, dtype=float)
    theta = _rotation_angle_rad(r)
    w = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    if theta < 1e-7:
        # sin(theta) ~ theta: w / 2 already approximates the rotation vector
        return np.degrees(w / 2.0)
    if math.pi - theta < 1e-7:
        # near half-turn the skew part vanishes; recover the axis from R + I
        b = r + np.eye(3)
        col = b[:, int(np.argmax(np.linalg.norm(b, axis=0)))]
        axis = col / np.linalg.norm(col)
        if w @ axis < 0:
            axis = -axis
        return np.degrees(theta * axis)
    return np.degrees(theta * w / (2.0 * math.sin(theta)))


def rotation_from_rotvec_deg(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    angle = float(np.linalg.norm(v))
    if angle == 0.0:
        return np.eye(3)
    return rotation_from_axis_angle_deg(v, angle)


def random_rotation(rng: np.random.Generator, max_angle_deg: float = 180.0) -> np.ndarray:
    """Rotation about a uniformly random axis by U(0, max_angle_deg)."""
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.normal(size=3)
    return rotation_from_axis_angle_deg(axis, float(rng.uniform(0.0, max_angle_deg)))


def transform_line(t: RigidTransform, line: Line3) -> Line3:
    """Image of a line under a rigid motion."""
    d = t.rotation @ line.direction
    return Line3(apply(t, line.anchor), d / np.linalg.norm(d))


def point_line_distances(points, line: Line3) -> np.ndarray:
    """Euclidean distance from each row point to an infinite line."""
    rel = np.asarray(points, dtype=float) - line.anchor.as_array()
    along = rel @ line.direction
    perp = rel - np.outer(along, line.direction)
    return np.linalg.norm(perp, axis=1)
