"""Triangle meshes and the ASCII OBJ subset used for interchange."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from .pose import Pose, SimilarityTransform

logger = logging.getLogger(__name__)

_DEGENERATE_AREA = 1e-12  # m^2


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangle mesh. Degenerate triangles are dropped at construction."""

    vertices: np.ndarray
    triangles: np.ndarray
    id: str = field(default="mesh")

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.array(self.triangles, dtype=np.int32).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise InvalidArgumentError(f"mesh {self.id!r}: non-finite vertex")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise InvalidArgumentError(f"mesh {self.id!r}: triangle index out of range")
        if t.size:
            areas = triangle_areas(v, t)
            keep = areas >= _DEGENERATE_AREA
            dropped = int((~keep).sum())
            if dropped:
                logger.warning("mesh %r: dropped %d degenerate triangles", self.id, dropped)
                t = t[keep]
        v.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def bounding_sphere(self) -> tuple[np.ndarray, float]:
        """Center on the AABB midpoint; radius covers all vertices."""
        lo, hi = self.aabb
        c = 0.5 * (lo + hi)
        r = float(np.linalg.norm(self.vertices - c, axis=1).max())
        return c, r

    def triangle_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            self.vertices[self.triangles[:, 0]],
            self.vertices[self.triangles[:, 1]],
            self.vertices[self.triangles[:, 2]],
        )

    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    def transformed(self, tf: Pose | SimilarityTransform, new_id: str | None = None) -> "TriMesh":
        return TriMesh(tf.apply(self.vertices), self.triangles, new_id or self.id)


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def load_obj(path: str | Path, mesh_id: str | None = None) -> TriMesh:
    """Load the `v x y z` / `f i j k` OBJ subset; polygon faces are fan-triangulated."""
    path = Path(path)
    vertices: list[list[float]] = []
    triangles: list[list[int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise InvalidArgumentError(f"{path}:{lineno}: malformed vertex line")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    if i < 0:
                        raise InvalidArgumentError(f"{path}:{lineno}: negative indices unsupported")
                    idx.append(i - 1)
                if len(idx) < 3:
                    raise InvalidArgumentError(f"{path}:{lineno}: face with fewer than 3 vertices")
                for k in range(1, len(idx) - 1):
                    triangles.append([idx[0], idx[k], idx[k + 1]])
            # all other prefixes (vn, vt, o, g, s, usemtl, ...) are ignored
    return TriMesh(np.array(vertices), np.array(triangles, dtype=np.int32).reshape(-1, 3),
                   mesh_id or path.stem)


def save_obj(mesh: TriMesh, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
