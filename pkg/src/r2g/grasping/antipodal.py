"""Antipodal grasp pairs under a friction-cone constraint.

Grasp frame convention: x = closing axis (contact a toward contact b),
z = approach direction, chosen as the unit vector orthogonal to x closest to
world -z so grasps prefer a top-down approach; origin = contact midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import Pose, mat_to_quat
from .sampling import SurfaceSample

_MIN_WIDTH = 1e-6


@dataclass(frozen=True)
class GripperModel:
    """Parallel-jaw gripper as boxes: two fingers and a palm bridge."""

    max_width: float = 0.08
    finger_length: float = 0.05
    finger_thickness: float = 0.01
    palm_depth: float = 0.02

    def __post_init__(self):
        if min(self.max_width, self.finger_length, self.finger_thickness,
               self.palm_depth) <= 0:
            raise InvalidArgumentError("gripper dimensions must be positive")
        if self.max_width <= 2 * self.finger_thickness:
            raise InvalidArgumentError("max_width must exceed twice the finger thickness")


@dataclass(frozen=True)
class Grasp:
    contact_a: SurfaceSample
    contact_b: SurfaceSample
    width: float
    pose: Pose
    quality: float


def grasp_frame(contact_a: np.ndarray, contact_b: np.ndarray) -> Pose:
    """Grasp pose from two contact points (see module docstring)."""
    x = contact_b - contact_a
    width = float(np.linalg.norm(x))
    if width < _MIN_WIDTH:
        raise InvalidArgumentError("contacts coincide")
    x = x / width
    z = _approach_axis(x)
    y = np.cross(z, x)
    m = np.stack([x, y, z], axis=1)
    return Pose(0.5 * (contact_a + contact_b), mat_to_quat(m))


def _approach_axis(x: np.ndarray) -> np.ndarray:
    down = np.array([0.0, 0.0, -1.0])
    z = down - np.dot(down, x) * x
    n = np.linalg.norm(z)
    if n < 1e-8:  # closing axis vertical: prefer -y approach
        minus_y = np.array([0.0, -1.0, 0.0])
        z = minus_y - np.dot(minus_y, x) * x
        n = np.linalg.norm(z)
        if n < 1e-8:
            z = np.array([1.0, 0.0, 0.0])
            n = 1.0
    return z / n


def antipodal_pairs(samples: list[SurfaceSample], friction_coefficient: float,
                    gripper: GripperModel) -> list[Grasp]:
    """All unordered sample pairs satisfying the friction-cone antipodality
    test and the gripper width limit; quality 1 at perfectly opposed normals,
    0 at the cone boundary."""
    if friction_coefficient <= 0:
        raise InvalidArgumentError("friction coefficient must be positive")
    cone = float(np.arctan(friction_coefficient))
    n = len(samples)
    if n < 2:
        return []
    pts = np.array([s.point for s in samples])
    nrm = np.array([s.normal for s in samples])
    ii, jj = np.triu_indices(n, k=1)
    d = pts[jj] - pts[ii]
    width = np.linalg.norm(d, axis=1)
    ok = (width > _MIN_WIDTH) & (width <= gripper.max_width)
    u = np.zeros_like(d)
    u[ok] = d[ok] / width[ok, None]
    # angle(u, -n_a) and angle(-u, -n_b) both within the cone half-angle
    cos_a = -(u * nrm[ii]).sum(axis=1)
    cos_b = (u * nrm[jj]).sum(axis=1)
    ang_a = np.arccos(np.clip(cos_a, -1.0, 1.0))
    ang_b = np.arccos(np.clip(cos_b, -1.0, 1.0))
    ok &= (ang_a <= cone) & (ang_b <= cone)
    grasps = []
    for idx in np.nonzero(ok)[0]:
        i, j = int(ii[idx]), int(jj[idx])
        quality = 1.0 - max(ang_a[idx], ang_b[idx]) / cone
        grasps.append(Grasp(samples[i], samples[j], float(width[idx]),
                            grasp_frame(pts[i], pts[j]), float(quality)))
    return grasps
