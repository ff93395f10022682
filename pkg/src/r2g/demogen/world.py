"""Floating-gripper kinematic world: attachment, settling, rendering.

No contact dynamics: objects move only while rigidly attached to the gripper,
and settle by a straight vertical drop onto the highest support under their
footprint when released.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraspFailureError, InvalidArgumentError
from ..geometry import Bvh, DepthImage, PinholeCamera, Pose, TriMesh
from ..grasping import (GripperModel, box_triangles_overlap, closing_corridor,
                        gripper_collides)
from .scene import TABLE_ROLE, MeshPool, Scene

TABLE_HEIGHT = 0.0


class WorldObject:
    def __init__(self, mesh: TriMesh, bvh: Bvh, role: str, pose: Pose):
        self.mesh = mesh
        self.bvh = bvh
        self.role = role
        self.pose = pose
        self._world_tris: np.ndarray | None = None

    def set_pose(self, pose: Pose) -> None:
        self.pose = pose
        self._world_tris = None

    def world_triangles(self) -> np.ndarray:
        if self._world_tris is None:
            self._world_tris = self.pose.apply(self.mesh.vertices)[self.mesh.triangles]
        return self._world_tris

    def world_aabb(self) -> tuple[np.ndarray, np.ndarray]:
        v = self.pose.apply(self.mesh.vertices)
        return v.min(axis=0), v.max(axis=0)


class KinematicWorld:
    """Single-context mutable world over immutable meshes."""

    def __init__(self, scene: Scene, mesh_pool: MeshPool,
                 gripper: GripperModel, table: TriMesh):
        self.gripper = gripper
        self.objects: list[WorldObject] = [
            WorldObject(table, Bvh(table), TABLE_ROLE, Pose.identity())
        ]
        for obj in scene.objects:
            self.objects.append(WorldObject(
                mesh_pool.mesh(obj.mesh_id), mesh_pool.bvh(obj.mesh_id),
                obj.role, obj.pose))
        self.gripper_pose = Pose([0.0, 0.0, 0.4], [0.0, 1.0, 0.0, 0.0])
        self.gripper_open = 1.0
        self.open_width = gripper.max_width
        self.attached: int | None = None
        self._attach_rel: Pose | None = None

    # -- queries ------------------------------------------------------------

    def find(self, role: str) -> int:
        for i, obj in enumerate(self.objects):
            if obj.role == role:
                return i
        raise InvalidArgumentError(f"world has no object with role {role!r}")

    def object_pose(self, index: int) -> Pose:
        return self.objects[index].pose

    def _world_meshes(self) -> list[tuple[str, np.ndarray]]:
        return [(o.mesh.id, o.world_triangles()) for o in self.objects]

    def gripper_collision_free(self, pose: Pose, open_width: float,
                               exempt_index: int | None = None,
                               corridor_only: bool = False) -> bool:
        exempt_id = None if exempt_index is None else self.objects[exempt_index].mesh.id
        return not gripper_collides(pose, open_width, self.gripper,
                                    self._world_meshes(), exempt_id=exempt_id,
                                    exempt_corridor_only=corridor_only)

    # -- gripper motion and attachment ---------------------------------------

    def set_gripper(self, pose: Pose) -> None:
        self.gripper_pose = pose
        if self.attached is not None:
            self.objects[self.attached].set_pose(pose.compose(self._attach_rel))

    def try_attach(self, index: int) -> bool:
        """Rigidly attach object `index` if the closing corridor intersects it."""
        corridor = closing_corridor(self.gripper, self.open_width, self.gripper_pose)
        tris = self.objects[index].world_triangles()
        if not box_triangles_overlap(corridor, tris).any():
            return False
        self.attached = index
        self._attach_rel = self.gripper_pose.invert().compose(self.objects[index].pose)
        return True

    def attach_or_fail(self, index: int) -> None:
        if not self.try_attach(index):
            raise GraspFailureError("closing corridor does not intersect the object")

    def release(self) -> None:
        """Detach and drop the object straight down to resting contact."""
        if self.attached is None:
            return
        index = self.attached
        self.attached = None
        self._attach_rel = None
        self.settle(index)

    def settle(self, index: int) -> None:
        obj = self.objects[index]
        lo, hi = obj.world_aabb()
        support = TABLE_HEIGHT
        for i, other in enumerate(self.objects):
            if i == index or other.role == TABLE_ROLE:
                continue
            olo, ohi = other.world_aabb()
            if lo[0] < ohi[0] and hi[0] > olo[0] and lo[1] < ohi[1] and hi[1] > olo[1]:
                support = max(support, float(ohi[2]))
        drop = lo[2] - support
        if abs(drop) > 1e-12:
            pose = obj.pose
            obj.set_pose(Pose(pose.position - [0.0, 0.0, drop], pose.quaternion))

    def attach_relative(self) -> Pose | None:
        return self._attach_rel

    # -- rendering ------------------------------------------------------------

    def render_depth(self, camera: PinholeCamera) -> DepthImage:
        """Depth over all object instances (rays instanced into mesh frames)."""
        dirs = camera.pixel_directions()
        n = len(dirs)
        best_t = np.full(n, np.inf)
        origin = camera.pose.position
        for obj in self.objects:
            inv = obj.pose.invert()
            rot = inv.rotation()
            o_local = np.broadcast_to(inv.apply(origin), dirs.shape)
            d_local = dirs @ rot.T
            t, _ = obj.bvh.raycast_batch(o_local, d_local)
            best_t = np.minimum(best_t, t)
        z = best_t * (dirs @ camera.view_axis())
        z = np.where(np.isfinite(best_t), z, np.inf)
        return DepthImage(camera.width, camera.height,
                          z.reshape(camera.height, camera.width))

    def render_cloud(self, cameras: list[PinholeCamera], cloud_size: int,
                     rng: np.random.Generator) -> np.ndarray:
        """Merged world-frame cloud over all cameras, randomly downsampled to
        exactly cloud_size points (resampled with replacement when short)."""
        from ..geometry import depth_to_cloud

        parts = []
        for cam in cameras:
            depth = self.render_depth(cam)
            pts = depth_to_cloud(cam, depth)
            if len(pts):
                parts.append(pts)
        merged = np.concatenate(parts) if parts else np.zeros((1, 3))
        if len(merged) >= cloud_size:
            pick = rng.choice(len(merged), size=cloud_size, replace=False)
        else:
            pick = rng.choice(len(merged), size=cloud_size, replace=True)
        return merged[pick].astype(np.float32)
