"""Gripper-vs-world collision queries via box/triangle separating axes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import Pose, TriMesh
from .antipodal import Grasp, GripperModel

CLEARANCE = 0.005  # extra finger opening during checks, meters


@dataclass(frozen=True)
class OrientedBox:
    """Box with local center/half-extents, placed in the world by `pose`."""

    center: np.ndarray  # in the owning frame
    half: np.ndarray
    pose: Pose  # owning frame -> world

    def world_center(self) -> np.ndarray:
        return self.pose.apply(self.center)

    def axes(self) -> np.ndarray:
        return self.pose.rotation()


def box_triangles_overlap(box: OrientedBox, triangles: np.ndarray) -> np.ndarray:
    """Per-triangle overlap mask (Akenine-Moller SAT), triangles (n, 3, 3) world."""
    n = len(triangles)
    if n == 0:
        return np.zeros(0, dtype=bool)
    rot = box.axes()
    local = (triangles.reshape(-1, 3) - box.world_center()) @ rot
    tri = local.reshape(n, 3, 3)
    h = box.half
    alive = np.ones(n, dtype=bool)

    # box face normals: AABB overlap in box frame
    for k in range(3):
        lo = tri[:, :, k].min(axis=1)
        hi = tri[:, :, k].max(axis=1)
        alive &= (hi >= -h[k]) & (lo <= h[k])
    if not alive.any():
        return alive

    # triangle plane
    e0 = tri[:, 1] - tri[:, 0]
    e1 = tri[:, 2] - tri[:, 1]
    e2 = tri[:, 0] - tri[:, 2]
    nrm = np.cross(e0, tri[:, 2] - tri[:, 0])
    dist = (nrm * tri[:, 0]).sum(axis=1)
    radius = (np.abs(nrm) * h).sum(axis=1)
    alive &= np.abs(dist) <= radius
    if not alive.any():
        return alive

    # 9 edge cross products a_k x e_m
    for edges in (e0, e1, e2):
        for k in range(3):
            axis = np.zeros_like(edges)
            k1, k2 = (k + 1) % 3, (k + 2) % 3
            axis[:, k1] = -edges[:, k2]
            axis[:, k2] = edges[:, k1]
            p = (tri * axis[:, None, :]).sum(axis=2)
            r = (np.abs(axis) * h).sum(axis=1)
            alive &= ~((p.min(axis=1) > r) | (p.max(axis=1) < -r))
            if not alive.any():
                return alive
    return alive


def gripper_boxes(gripper: GripperModel, open_width: float, pose: Pose
                  ) -> list[OrientedBox]:
    """Finger and palm boxes in the grasp frame (fingertips at z = 0,
    fingers opened to open_width, palm bridging behind them)."""
    half_gap = open_width / 2.0
    ft = gripper.finger_thickness
    fl = gripper.finger_length
    boxes = []
    for side in (-1.0, 1.0):
        boxes.append(OrientedBox(
            np.array([side * (half_gap + ft / 2.0), 0.0, -fl / 2.0]),
            np.array([ft / 2.0, ft / 2.0, fl / 2.0]), pose))
    boxes.append(OrientedBox(
        np.array([0.0, 0.0, -fl - gripper.palm_depth / 2.0]),
        np.array([half_gap + ft, ft / 2.0, gripper.palm_depth / 2.0]), pose))
    return boxes


def closing_corridor(gripper: GripperModel, open_width: float, pose: Pose) -> OrientedBox:
    """The volume swept by the fingers while closing."""
    return OrientedBox(
        np.array([0.0, 0.0, -gripper.finger_length / 2.0]),
        np.array([open_width / 2.0, gripper.finger_thickness / 2.0,
                  gripper.finger_length / 2.0]), pose)


def _box_aabb(box: OrientedBox) -> tuple[np.ndarray, np.ndarray]:
    r = np.abs(box.axes()) @ box.half
    c = box.world_center()
    return c - r, c + r


def gripper_collides(pose: Pose, open_width: float, gripper: GripperModel,
                     meshes_world: list[tuple[str, np.ndarray]],
                     exempt_id: str | None = None,
                     exempt_corridor_only: bool = False) -> bool:
    """True if any gripper box hits any world triangle.

    meshes_world entries are (mesh_id, world-frame triangle array (n, 3, 3)).
    `exempt_id` names the grasped object: skipped entirely, or, with
    `exempt_corridor_only`, only its triangles inside the closing corridor.
    """
    boxes = gripper_boxes(gripper, open_width, pose)
    corridor = closing_corridor(gripper, open_width, pose) if exempt_corridor_only else None
    for mesh_id, tris in meshes_world:
        if len(tris) == 0:
            continue
        if mesh_id == exempt_id:
            if corridor is None:
                continue
            tris = tris[~box_triangles_overlap(corridor, tris)]
            if len(tris) == 0:
                continue
        lo = tris.min(axis=1)
        hi = tris.max(axis=1)
        for box in boxes:
            blo, bhi = _box_aabb(box)
            near = np.all(hi >= blo, axis=1) & np.all(lo <= bhi, axis=1)
            if near.any() and box_triangles_overlap(box, tris[near]).any():
                return True
    return False


def grasp_collision_free(grasp: Grasp, world_meshes: list[tuple[TriMesh, Pose]],
                         gripper: GripperModel,
                         grasped_id: str | None = None) -> bool:
    """Check a world-frame grasp: fingers opened to width + CLEARANCE must not
    intersect the world; the grasped object's triangles inside the closing
    corridor are exempt."""
    meshes_world = [
        (mesh.id, mesh.vertices[mesh.triangles] if pose.is_close(Pose.identity())
         else pose.apply(mesh.vertices)[mesh.triangles])
        for mesh, pose in world_meshes
    ]
    return not gripper_collides(grasp.pose, grasp.width + CLEARANCE, gripper,
                                meshes_world, exempt_id=grasped_id,
                                exempt_corridor_only=True)
