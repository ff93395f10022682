"""Pinhole cameras, depth images, rendering, and pixel lifting.

Camera frame: +z forward, +x right, +y down; `pose` maps camera frame to
world. Integer pixel indices address pixel centers, so lifting pixel (u, v)
with its stored depth inverts projection exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError, MalformedArchiveError
from .bvh import Bvh
from .pose import Pose

DEPTH_MAGIC = b"R2GDEPTH"


@dataclass(frozen=True)
class PinholeCamera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose

    def __post_init__(self):
        if min(self.fx, self.fy) <= 0 or min(self.width, self.height) <= 0:
            raise InvalidArgumentError("camera intrinsics and size must be positive")

    def project(self, points_world: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """World points to pixel coordinates and camera-frame depth z."""
        pts = np.asarray(points_world, dtype=np.float64).reshape(-1, 3)
        local = self.pose.invert().apply(pts)
        z = local[:, 2]
        u = self.fx * local[:, 0] / z + self.cx
        v = self.fy * local[:, 1] / z + self.cy
        return np.stack([u, v], axis=1), z

    def pixel_directions(self) -> np.ndarray:
        """Unit world-frame ray directions through every pixel center, row-major."""
        u = np.arange(self.width, dtype=np.float64)
        v = np.arange(self.height, dtype=np.float64)
        uu, vv = np.meshgrid(u, v)
        d = np.stack([(uu - self.cx) / self.fx, (vv - self.cy) / self.fy,
                      np.ones_like(uu)], axis=-1).reshape(-1, 3)
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d @ self.pose.rotation().T

    def view_axis(self) -> np.ndarray:
        return self.pose.rotation()[:, 2]


def look_at_pose(position: np.ndarray, target: np.ndarray) -> Pose:
    """Camera-to-world pose looking from position at target, image-y pointing
    as far down in the world as the view direction allows."""
    position = np.asarray(position, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - position
    n = np.linalg.norm(z)
    if n < 1e-12:
        raise InvalidArgumentError("camera position coincides with target")
    z = z / n
    x = np.cross(np.array([0.0, 0.0, -1.0]), z)
    if np.linalg.norm(x) < 1e-8:  # looking straight up/down: pick x along world x
        x = np.array([1.0, 0.0, 0.0])
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    m = np.eye(4)
    m[:3, 0], m[:3, 1], m[:3, 2], m[:3, 3] = x, y, z, position
    return Pose.from_matrix(m)


@dataclass(frozen=True)
class DepthImage:
    """Row-major camera-z depth in meters; non-finite entries mean no hit."""

    width: int
    height: int
    depth: np.ndarray

    def __post_init__(self):
        d = np.array(self.depth, dtype=np.float32).reshape(self.height, self.width)
        finite = d[np.isfinite(d)]
        if finite.size and finite.min() <= 0:
            raise InvalidArgumentError("finite depth entries must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "depth", d)

    def at(self, u: float, v: float) -> float:
        """Depth at the pixel whose center is nearest to (u, v)."""
        ui, vi = int(round(u)), int(round(v))
        if not (0 <= ui < self.width and 0 <= vi < self.height):
            raise InvalidArgumentError(f"pixel ({u}, {v}) out of bounds")
        return float(self.depth[vi, ui])

    def save(self, path: str | Path) -> None:
        with open(path, "wb") as fh:
            fh.write(DEPTH_MAGIC)
            fh.write(struct.pack("<II", self.width, self.height))
            fh.write(self.depth.astype("<f4").tobytes())

    @staticmethod
    def load(path: str | Path) -> "DepthImage":
        raw = Path(path).read_bytes()
        if len(raw) < 16 or raw[:8] != DEPTH_MAGIC:
            raise MalformedArchiveError(f"{path}: bad depth image magic", 0)
        w, h = struct.unpack("<II", raw[8:16])
        expected = 16 + 4 * w * h
        if len(raw) != expected:
            raise MalformedArchiveError(f"{path}: depth payload truncated", len(raw))
        data = np.frombuffer(raw[16:], dtype="<f4").reshape(h, w)
        return DepthImage(w, h, data)


def render_depth(bvh: Bvh, camera: PinholeCamera) -> DepthImage:
    """Ray-trace one BVH; depth is the camera-frame z of each hit."""
    dirs = camera.pixel_directions()
    origins = np.broadcast_to(camera.pose.position, dirs.shape)
    t, _ = bvh.raycast_batch(origins, dirs)
    z = t * (dirs @ camera.view_axis())
    z = np.where(np.isfinite(t), z, np.inf)
    return DepthImage(camera.width, camera.height, z.reshape(camera.height, camera.width))


def lift_pixels(camera: PinholeCamera, depth: DepthImage, pixels) -> tuple[np.ndarray, np.ndarray]:
    """Back-project pixels with finite depth into world points.

    Returns (points, indices) where indices name the liftable entries of
    `pixels`; pixels over non-finite depth are skipped.
    """
    pts = []
    idx = []
    for i, (u, v) in enumerate(pixels):
        z = depth.at(u, v)
        if not np.isfinite(z):
            continue
        pts.append([(u - camera.cx) * z / camera.fx, (v - camera.cy) * z / camera.fy, z])
        idx.append(i)
    if not pts:
        return np.zeros((0, 3)), np.zeros(0, dtype=np.int64)
    world = camera.pose.apply(np.array(pts, dtype=np.float64))
    return world, np.array(idx, dtype=np.int64)


def depth_to_cloud(camera: PinholeCamera, depth: DepthImage) -> np.ndarray:
    """All finite-depth pixels lifted to world points (vectorized full-frame lift)."""
    d = depth.depth.astype(np.float64)
    vv, uu = np.nonzero(np.isfinite(d))
    if len(vv) == 0:
        return np.zeros((0, 3))
    z = d[vv, uu]
    local = np.stack([(uu - camera.cx) * z / camera.fx,
                      (vv - camera.cy) * z / camera.fy, z], axis=1)
    return camera.pose.apply(local)
