"""Scene randomization: mesh choice, table placement, yaw randomization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError, SceneSamplingFailedError
from ..geometry import Bvh, Pose, TriMesh, load_obj
from ..grasping import GraspSet, load_grasps
from .task import TaskSpec

TABLE_ROLE = "table"
PRIMARY_ROLE = "primary"
SECONDARY_ROLE = "secondary"

_MIN_GAP = 0.02  # m, required AABB separation in x/y
_MAX_TRIES = 1000


@dataclass(frozen=True)
class SceneObject:
    mesh_id: str
    role: str
    pose: Pose


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    seed: int

    def find(self, role: str) -> SceneObject:
        for obj in self.objects:
            if obj.role == role:
                return obj
        raise InvalidArgumentError(f"scene has no object with role {role!r}")


class MeshPool:
    """Canonical metric meshes plus their precomputed grasp sets, by id."""

    def __init__(self, meshes: dict[str, TriMesh],
                 grasps: dict[str, GraspSet] | None = None):
        if not meshes:
            raise InvalidArgumentError("mesh pool is empty")
        self.meshes = dict(meshes)
        self.grasps = dict(grasps or {})
        self._bvhs: dict[str, Bvh] = {}

    @staticmethod
    def from_dirs(mesh_dir: str | Path, grasp_dir: str | Path | None = None
                  ) -> "MeshPool":
        mesh_dir = Path(mesh_dir)
        meshes = {p.stem: load_obj(p) for p in sorted(mesh_dir.glob("*.obj"))}
        grasps = {}
        if grasp_dir is not None:
            for p in sorted(Path(grasp_dir).glob("*.grasps.json")):
                gs = load_grasps(p)
                grasps[gs.mesh_id] = gs
        return MeshPool(meshes, grasps)

    def mesh(self, mesh_id: str) -> TriMesh:
        if mesh_id not in self.meshes:
            raise InvalidArgumentError(f"mesh id {mesh_id!r} not in pool")
        return self.meshes[mesh_id]

    def bvh(self, mesh_id: str) -> Bvh:
        if mesh_id not in self._bvhs:
            self._bvhs[mesh_id] = Bvh(self.mesh(mesh_id))
        return self._bvhs[mesh_id]

    def grasp_set(self, mesh_id: str) -> GraspSet | None:
        return self.grasps.get(mesh_id)


def _yaw_pose(x: float, y: float, yaw: float) -> Pose:
    return Pose([x, y, 0.0], [np.cos(yaw / 2), 0.0, 0.0, np.sin(yaw / 2)])


def _footprint_radius(mesh: TriMesh) -> float:
    return float(np.linalg.norm(mesh.vertices[:, :2], axis=1).max())


def _xy_aabb(mesh: TriMesh, pose: Pose) -> tuple[np.ndarray, np.ndarray]:
    v = pose.apply(mesh.vertices)[:, :2]
    return v.min(axis=0), v.max(axis=0)


def sample_scene(task: TaskSpec, mesh_pool: MeshPool, seed: int) -> Scene:
    """Uniform mesh choice per role, uniform position and yaw on the table,
    rejection-sampled until object AABBs are separated by >= 2 cm in x/y."""
    for mid in task.primary_mesh_ids + task.secondary_mesh_ids:
        mesh_pool.mesh(mid)  # validates presence
    rng = np.random.default_rng(seed)
    roles = [(PRIMARY_ROLE, task.primary_mesh_ids)]
    if task.has_secondary:
        roles.append((SECONDARY_ROLE, task.secondary_mesh_ids))
    chosen = [(role, ids[int(rng.integers(0, len(ids)))]) for role, ids in roles]
    # place big footprints first: small objects can always dodge them
    order = sorted(chosen,
                   key=lambda rm: -_footprint_radius(mesh_pool.mesh(rm[1])))

    placed: list[SceneObject] = []
    boxes: list[tuple[np.ndarray, np.ndarray]] = []
    for role, mesh_id in order:
        mesh = mesh_pool.mesh(mesh_id)
        margin = _footprint_radius(mesh)
        x_lo, x_hi = task.workspace_x
        y_lo, y_hi = task.workspace_y
        # keep the whole footprint inside the workspace for any yaw
        if x_hi - x_lo > 2 * margin:
            x_lo, x_hi = x_lo + margin, x_hi - margin
        if y_hi - y_lo > 2 * margin:
            y_lo, y_hi = y_lo + margin, y_hi - margin
        ok = False
        for _ in range(_MAX_TRIES):
            x = float(rng.uniform(x_lo, x_hi))
            y = float(rng.uniform(y_lo, y_hi))
            yaw = float(rng.uniform(0.0, 2 * np.pi))
            pose = _yaw_pose(x, y, yaw)
            lo, hi = _xy_aabb(mesh, pose)
            if all(_gap(lo, hi, blo, bhi) >= _MIN_GAP for blo, bhi in boxes):
                placed.append(SceneObject(mesh_id, role, pose))
                boxes.append((lo, hi))
                ok = True
                break
        if not ok:
            raise SceneSamplingFailedError(
                f"could not place {role} object after {_MAX_TRIES} tries (seed {seed})")
    role_rank = {PRIMARY_ROLE: 0, SECONDARY_ROLE: 1}
    placed.sort(key=lambda o: role_rank[o.role])
    return Scene(tuple(placed), seed)


def _gap(alo: np.ndarray, ahi: np.ndarray, blo: np.ndarray, bhi: np.ndarray) -> float:
    dx = max(blo[0] - ahi[0], alo[0] - bhi[0])
    dy = max(blo[1] - ahi[1], alo[1] - bhi[1])
    return max(dx, dy)
