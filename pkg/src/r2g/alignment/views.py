"""Rendered view bundles and the demonstration reference observation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import (Bvh, DepthImage, PinholeCamera, Pose, TriMesh,
                        fibonacci_hemisphere, look_at_pose, render_depth)
from .descriptors import DescriptorSet, load_descriptors


@dataclass(frozen=True)
class ViewBundle:
    """One rendered view of a canonical mesh: camera, depth, descriptors."""

    view_index: int
    direction: np.ndarray  # unit vector from the object toward the camera
    camera: PinholeCamera
    depth: DepthImage
    descriptors: DescriptorSet

    def __post_init__(self):
        d = np.array(self.direction, dtype=np.float64).reshape(3)
        d.setflags(write=False)
        object.__setattr__(self, "direction", d)
        # camera looks back at the object: view axis == -direction
        if np.linalg.norm(self.camera.view_axis() + d) > 1e-6:
            raise InvalidArgumentError(
                f"view {self.view_index}: camera does not look along -direction")


@dataclass(frozen=True)
class ReferenceObservation:
    """Object-centric crop of the demonstration's first frame."""

    depth: DepthImage
    camera: PinholeCamera
    descriptors: DescriptorSet
    object_mask: np.ndarray  # (h, w) bool

    def __post_init__(self):
        mask = np.array(self.object_mask, dtype=bool).reshape(
            self.depth.height, self.depth.width)
        mask.setflags(write=False)
        object.__setattr__(self, "object_mask", mask)
        for u, v in self.descriptors.keypoints:
            ui, vi = int(round(u)), int(round(v))
            if not (0 <= ui < self.depth.width and 0 <= vi < self.depth.height) \
                    or not mask[vi, ui]:
                raise InvalidArgumentError(
                    f"reference keypoint ({u}, {v}) outside object mask")


@dataclass(frozen=True)
class ViewRenderConfig:
    n_views: int = 41
    width: int = 128
    height: int = 128
    vertical_fov_deg: float = 60.0
    distance_factor: float = 2.5  # camera distance in bounding-sphere radii

    def camera_for(self, mesh: TriMesh, direction: np.ndarray) -> PinholeCamera:
        center, radius = mesh.bounding_sphere()
        dist = self.distance_factor * max(radius, 1e-6)
        pose = look_at_pose(center + dist * np.asarray(direction), center)
        fy = (self.height / 2.0) / np.tan(np.radians(self.vertical_fov_deg) / 2.0)
        return PinholeCamera(fy, fy, (self.width - 1) / 2.0, (self.height - 1) / 2.0,
                             self.width, self.height, pose)


def render_views(mesh: TriMesh, config: ViewRenderConfig
                 ) -> list[tuple[np.ndarray, PinholeCamera, DepthImage]]:
    """Depth-render the mesh from fibonacci_hemisphere(config.n_views) directions."""
    bvh = Bvh(mesh)
    out = []
    for direction in fibonacci_hemisphere(config.n_views):
        cam = config.camera_for(mesh, direction)
        out.append((direction, cam, render_depth(bvh, cam)))
    return out


def camera_to_json(camera: PinholeCamera) -> dict:
    arr = camera.pose.to_array()
    return {
        "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
        "width": camera.width, "height": camera.height,
        "pose": {"position": arr[:3].tolist(), "quat_wxyz": arr[3:].tolist()},
    }


def camera_from_json(raw: dict) -> PinholeCamera:
    pose = Pose(np.array(raw["pose"]["position"]), np.array(raw["pose"]["quat_wxyz"]))
    return PinholeCamera(raw["fx"], raw["fy"], raw["cx"], raw["cy"],
                         int(raw["width"]), int(raw["height"]), pose)


def write_view_manifest(path: str | Path, entries: list[dict]) -> None:
    """entries: per-view dicts with view_index, direction, camera (json dict),
    depth_path, descriptors_path."""
    Path(path).write_text(json.dumps({"views": entries}, indent=1))


def load_view_bundles(manifest_path: str | Path) -> list[ViewBundle]:
    raw = json.loads(Path(manifest_path).read_text())
    base = Path(manifest_path).parent
    bundles = []
    for entry in raw["views"]:
        depth_path = base / entry["depth_path"]
        desc_path = base / entry["descriptors_path"]
        for p in (depth_path, desc_path):
            if not p.exists():
                raise InvalidArgumentError(f"view manifest references missing file: {p}")
        bundles.append(ViewBundle(
            view_index=int(entry["view_index"]),
            direction=np.array(entry["direction"], dtype=np.float64),
            camera=camera_from_json(entry["camera"]),
            depth=DepthImage.load(depth_path),
            descriptors=load_descriptors(desc_path),
        ))
    return bundles
