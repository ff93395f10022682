"""Per-mesh grasp precomputation and JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import EmptyGraspSetError, InvalidArgumentError
from ..geometry import Pose, TriMesh
from .antipodal import Grasp, GripperModel, antipodal_pairs
from .sampling import SurfaceSample, sample_surface


@dataclass(frozen=True)
class GraspConfig:
    n_samples: int = 512
    friction_coefficient: float = 0.5
    top_n: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2 or self.top_n < 1:
            raise InvalidArgumentError("n_samples >= 2 and top_n >= 1 required")


@dataclass(frozen=True)
class GraspSet:
    mesh_id: str
    gripper: GripperModel
    grasps: list[Grasp]


def precompute_grasps(mesh: TriMesh, config: GraspConfig = GraspConfig(),
                      gripper: GripperModel = GripperModel()) -> GraspSet:
    """Sample the surface, keep the top-N antipodal grasps by quality.

    Deterministic per (mesh, config.seed). Raises EmptyGraspSetError when the
    mesh admits no grasp within the gripper width.
    """
    samples = sample_surface(mesh, config.n_samples, config.seed)
    grasps = antipodal_pairs(samples, config.friction_coefficient, gripper)
    if not grasps:
        raise EmptyGraspSetError(f"mesh {mesh.id!r}: no antipodal grasp found")
    grasps.sort(key=lambda g: (-g.quality, g.width,
                               tuple(g.contact_a.point), tuple(g.contact_b.point)))
    return GraspSet(mesh.id, gripper, grasps[: config.top_n])


def _sample_to_json(s: SurfaceSample) -> dict:
    return {"point": s.point.tolist(), "normal": s.normal.tolist(),
            "triangle_id": s.triangle_id}


def _sample_from_json(raw: dict) -> SurfaceSample:
    return SurfaceSample(np.array(raw["point"]), np.array(raw["normal"]),
                         int(raw["triangle_id"]))


def save_grasps(grasp_set: GraspSet, path: str | Path) -> None:
    g = grasp_set.gripper
    payload = {
        "mesh_id": grasp_set.mesh_id,
        "gripper": {"max_width": g.max_width, "finger_length": g.finger_length,
                    "finger_thickness": g.finger_thickness, "palm_depth": g.palm_depth},
        "grasps": [
            {
                "contact_a": _sample_to_json(gr.contact_a),
                "contact_b": _sample_to_json(gr.contact_b),
                "width": gr.width,
                "pose": {"pos": gr.pose.to_array()[:3].tolist(),
                         "quat_wxyz": gr.pose.to_array()[3:].tolist()},
                "quality": gr.quality,
            }
            for gr in grasp_set.grasps
        ],
    }
    Path(path).write_text(json.dumps(payload))


def load_grasps(path: str | Path) -> GraspSet:
    raw = json.loads(Path(path).read_text())
    gripper = GripperModel(**raw["gripper"])
    grasps = [
        Grasp(
            contact_a=_sample_from_json(g["contact_a"]),
            contact_b=_sample_from_json(g["contact_b"]),
            width=float(g["width"]),
            pose=Pose(np.array(g["pose"]["pos"]), np.array(g["pose"]["quat_wxyz"])),
            quality=float(g["quality"]),
        )
        for g in raw["grasps"]
    ]
    return GraspSet(raw["mesh_id"], gripper, grasps)
