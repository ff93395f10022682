"""Rigid poses and 7-DoF similarity transforms.

Conventions used everywhere in this package: quaternions are (w, x, y, z),
positions are meters, rotation matrices are world-from-local with column
vectors. Serialized quaternions are canonicalized to w >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError

_QUAT_NORM_TOL = 1e-9


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise InvalidArgumentError("quaternion norm too small to normalize")
    return q / n


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_to_mat(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def mat_to_quat(m: np.ndarray) -> np.ndarray:
    """Rotation matrix to (w, x, y, z), Shepperd's branch selection."""
    m = np.asarray(m, dtype=np.float64)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by quaternion q. v may be (3,) or (n, 3)."""
    return np.asarray(v, dtype=np.float64) @ quat_to_mat(q).T


def quat_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle in radians between two unit quaternions (double cover aware)."""
    d = abs(float(np.dot(a, b)))
    return 2.0 * np.arccos(min(1.0, d))


def quat_slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Shortest-arc spherical interpolation."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = float(np.dot(a, b))
    if d < 0.0:
        b = -b
        d = -d
    if d > 1.0 - 1e-12:
        return quat_normalize(a + t * (b - a))
    theta = np.arccos(min(1.0, d))
    s = np.sin(theta)
    return quat_normalize((np.sin((1 - t) * theta) / s) * a + (np.sin(t * theta) / s) * b)


def _frozen_array(a, shape, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("non-finite values in pose component")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotate by `quaternion` then translate by `position`."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    quaternion: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen_array(self.position, (3,)))
        q = quat_normalize(np.asarray(self.quaternion, dtype=np.float64).reshape(4))
        object.__setattr__(self, "quaternion", _frozen_array(q, (4,)))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_matrix(m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        return Pose(m[:3, 3], mat_to_quat(m[:3, :3]))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_mat(self.quaternion)
        m[:3, 3] = self.position
        return m

    def rotation(self) -> np.ndarray:
        return quat_to_mat(self.quaternion)

    def compose(self, other: "Pose") -> "Pose":
        """Return self applied after other: (self . other)(x) = self(other(x))."""
        return Pose(
            self.position + quat_rotate(self.quaternion, other.position),
            quat_mul(self.quaternion, other.quaternion),
        )

    def invert(self) -> "Pose":
        qi = quat_conj(self.quaternion)
        return Pose(-quat_rotate(qi, self.position), qi)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return quat_rotate(self.quaternion, points) + self.position

    def to_array(self) -> np.ndarray:
        """Serialize as [px py pz qw qx qy qz] with the quaternion sign fixed to w >= 0."""
        q = self.quaternion if self.quaternion[0] >= 0 else -self.quaternion
        return np.concatenate([self.position, q])

    @staticmethod
    def from_array(a: np.ndarray) -> "Pose":
        a = np.asarray(a, dtype=np.float64).reshape(7)
        return Pose(a[:3], a[3:])

    def is_close(self, other: "Pose", pos_tol: float = 1e-9, ang_tol: float = 1e-9) -> bool:
        return (
            float(np.linalg.norm(self.position - other.position)) <= pos_tol
            and quat_angle(self.quaternion, other.quaternion) <= ang_tol
        )


@dataclass(frozen=True)
class SimilarityTransform:
    """7-DoF map x -> scale * R x + translation (canonical-to-metric)."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidArgumentError(f"scale must be positive, got {self.scale}")
        q = quat_normalize(np.asarray(self.rotation, dtype=np.float64).reshape(4))
        object.__setattr__(self, "rotation", _frozen_array(q, (4,)))
        object.__setattr__(self, "translation", _frozen_array(self.translation, (3,)))
        object.__setattr__(self, "scale", float(self.scale))

    @staticmethod
    def identity() -> "SimilarityTransform":
        return SimilarityTransform(1.0, np.array([1.0, 0, 0, 0]), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.scale * quat_rotate(self.rotation, points) + self.translation

    def invert(self) -> "SimilarityTransform":
        qi = quat_conj(self.rotation)
        return SimilarityTransform(
            1.0 / self.scale, qi, -quat_rotate(qi, self.translation) / self.scale
        )

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.scale * quat_to_mat(self.rotation)
        m[:3, 3] = self.translation
        return m
