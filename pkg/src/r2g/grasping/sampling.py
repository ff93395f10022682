"""Area-weighted surface sampling with outward-oriented normals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import Bvh, TriMesh

_PARITY_VOTES = 5


@dataclass(frozen=True)
class SurfaceSample:
    point: np.ndarray
    normal: np.ndarray  # unit, outward
    triangle_id: int


def outward_triangle_normals(mesh: TriMesh, bvh: Bvh | None = None,
                             seed: int = 0) -> np.ndarray:
    """Geometric triangle normals flipped outward by a majority raycast
    parity vote (even crossing count along +n means +n leaves the mesh)."""
    a, b, c = mesh.triangle_corners()
    n = np.cross(b - a, c - a)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    bvh = bvh or Bvh(mesh)
    rng = np.random.default_rng(seed)
    m = len(mesh.triangles)
    # _PARITY_VOTES random interior points per triangle, rays along +normal
    u = rng.random((m, _PARITY_VOTES))
    v = rng.random((m, _PARITY_VOTES))
    su = np.sqrt(u)
    w0 = 1.0 - su
    w1 = su * (1.0 - v)
    w2 = su * v
    pts = (w0[..., None] * a[:, None] + w1[..., None] * b[:, None]
           + w2[..., None] * c[:, None])
    origins = (pts + 1e-6 * n[:, None]).reshape(-1, 3)
    dirs = np.repeat(n, _PARITY_VOTES, axis=0)
    counts = bvh.count_hits_batch(origins, dirs).reshape(m, _PARITY_VOTES)
    flip = (counts % 2 == 1).sum(axis=1) > _PARITY_VOTES // 2
    n[flip] = -n[flip]
    return n


def sample_surface(mesh: TriMesh, n: int, seed: int = 0) -> list[SurfaceSample]:
    """n area-weighted uniform surface samples, deterministic per seed."""
    if n < 1:
        raise InvalidArgumentError("need at least one sample")
    if len(mesh.triangles) == 0:
        raise InvalidArgumentError(f"mesh {mesh.id!r} has no triangles")
    areas = mesh.areas()
    total = areas.sum()
    if total <= 0:
        raise InvalidArgumentError(f"mesh {mesh.id!r} has zero surface area")
    normals = outward_triangle_normals(mesh, seed=seed)
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(areas) / total
    tri = np.searchsorted(cdf, rng.random(n), side="right")
    tri = np.minimum(tri, len(areas) - 1)
    a, b, c = mesh.triangle_corners()
    u = rng.random(n)
    v = rng.random(n)
    su = np.sqrt(u)
    pts = ((1.0 - su)[:, None] * a[tri] + (su * (1.0 - v))[:, None] * b[tri]
           + (su * v)[:, None] * c[tri])
    return [SurfaceSample(pts[i], normals[tri[i]], int(tri[i])) for i in range(n)]
