"""Bounding-volume hierarchy over mesh triangles with Moller-Trumbore raycasting.

The traversal result is defined to be identical to a brute-force scan over all
triangles: nearest hit with t > MIN_T, ties broken toward the lower triangle
id. Nodes whose entry distance equals the current best are still visited so
the tie-break sees every candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import InvalidArgumentError
from .mesh import TriMesh

MIN_T = 1e-9
_DET_EPS = 1e-12
_LEAF_SIZE = 4
_STACK_DEPTH = 64


@dataclass(frozen=True)
class Hit:
    triangle_id: int
    distance: float
    point: np.ndarray
    normal: np.ndarray


class Bvh:
    """Immutable acceleration structure for one mesh's triangles."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        n = len(mesh.triangles)
        if n == 0:
            self._empty = True
            self.node_min = np.zeros((0, 3))
            self.node_max = np.zeros((0, 3))
            self.node_left = np.zeros(0, dtype=np.int32)
            self.node_right = np.zeros(0, dtype=np.int32)
            self.node_start = np.zeros(0, dtype=np.int32)
            self.node_count = np.zeros(0, dtype=np.int32)
            self.tri_id = np.zeros(0, dtype=np.int32)
            self.v0 = self.v1 = self.v2 = np.zeros((0, 3))
            return
        self._empty = False
        a, b, c = mesh.triangle_corners()
        tri_min = np.minimum(np.minimum(a, b), c)
        tri_max = np.maximum(np.maximum(a, b), c)
        centroids = (a + b + c) / 3.0

        order = np.arange(n, dtype=np.int32)
        node_min: list[np.ndarray] = []
        node_max: list[np.ndarray] = []
        node_left: list[int] = []
        node_start: list[int] = []
        node_count: list[int] = []

        def build(lo: int, hi: int) -> int:
            idx = order[lo:hi]
            me = len(node_min)
            node_min.append(tri_min[idx].min(axis=0))
            node_max.append(tri_max[idx].max(axis=0))
            node_left.append(-1)
            node_start.append(lo)
            node_count.append(hi - lo)
            if hi - lo <= _LEAF_SIZE:
                return me
            cent = centroids[idx]
            axis = int(np.argmax(cent.max(axis=0) - cent.min(axis=0)))
            mid = (hi - lo) // 2
            part = np.argpartition(cent[:, axis], mid)
            order[lo:hi] = idx[part]
            node_count[me] = 0  # internal
            left = build(lo, lo + mid)
            build(lo + mid, hi)  # right child is always left + subtree size
            node_left[me] = left
            return me

        import sys

        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 10000))
        try:
            build(0, n)
        finally:
            sys.setrecursionlimit(old_limit)

        # right child index = index right after the left subtree in preorder
        left_arr = np.array(node_left, dtype=np.int32)
        right_arr = np.full(len(node_left), -1, dtype=np.int32)
        counts = np.array(node_count, dtype=np.int32)
        starts = np.array(node_start, dtype=np.int32)
        # compute subtree extents by a reverse pass
        subtree_end = np.zeros(len(node_left), dtype=np.int32)
        for i in range(len(node_left) - 1, -1, -1):
            if counts[i] > 0:
                subtree_end[i] = i + 1
            else:
                l = left_arr[i]
                r = subtree_end[l]
                right_arr[i] = r
                subtree_end[i] = subtree_end[r]
        self.node_min = np.ascontiguousarray(np.array(node_min))
        self.node_max = np.ascontiguousarray(np.array(node_max))
        self.node_left = left_arr
        self.node_right = right_arr
        self.node_start = starts
        self.node_count = counts
        self.tri_id = order.copy()
        self.v0 = np.ascontiguousarray(a[order])
        self.v1 = np.ascontiguousarray(b[order])
        self.v2 = np.ascontiguousarray(c[order])

    def raycast_batch(self, origins: np.ndarray, directions: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
        """Nearest-hit distances and triangle ids (-1 for miss) for many rays."""
        origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
        directions = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 3)
        if self._empty:
            return (np.full(len(origins), np.inf), np.full(len(origins), -1, dtype=np.int64))
        t, tid = _raycast_kernel(
            self.node_min, self.node_max, self.node_left, self.node_right,
            self.node_start, self.node_count, self.tri_id,
            self.v0, self.v1, self.v2, origins, directions,
        )
        return t, tid

    def count_hits_batch(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Number of triangle crossings with t > MIN_T along each ray."""
        origins = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
        directions = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 3)
        if self._empty:
            return np.zeros(len(origins), dtype=np.int64)
        return _count_kernel(
            self.node_min, self.node_max, self.node_left, self.node_right,
            self.node_start, self.node_count,
            self.v0, self.v1, self.v2, origins, directions,
        )


def raycast(bvh: Bvh, origin: np.ndarray, direction: np.ndarray) -> Hit | None:
    """Nearest intersection of one ray, or None on miss.

    The returned normal is the geometric triangle normal flipped to face
    against the ray.
    """
    direction = np.asarray(direction, dtype=np.float64).reshape(3)
    if abs(float(np.linalg.norm(direction)) - 1.0) > 1e-9:
        raise InvalidArgumentError("ray direction must be unit-norm")
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    t, tid = bvh.raycast_batch(origin[None, :], direction[None, :])
    if tid[0] < 0:
        return None
    tri = bvh.mesh.triangles[tid[0]]
    a, b, c = (bvh.mesh.vertices[i] for i in tri)
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n)
    if float(np.dot(n, direction)) > 0:
        n = -n
    return Hit(int(tid[0]), float(t[0]), origin + t[0] * direction, n)


@njit(cache=True)
def _slab(bmin, bmax, o, inv_d, d):
    """Entry/exit parameters of a ray against an AABB; robust to zero components."""
    tmin = -np.inf
    tmax = np.inf
    for k in range(3):
        if d[k] != 0.0:
            t1 = (bmin[k] - o[k]) * inv_d[k]
            t2 = (bmax[k] - o[k]) * inv_d[k]
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
        elif o[k] < bmin[k] or o[k] > bmax[k]:
            return 1.0, -1.0  # no overlap
    return tmin, tmax


@njit(cache=True)
def _ray_tri(o, d, va, vb, vc):
    """Moller-Trumbore; returns hit parameter t or -1."""
    e1x = vb[0] - va[0]
    e1y = vb[1] - va[1]
    e1z = vb[2] - va[2]
    e2x = vc[0] - va[0]
    e2y = vc[1] - va[1]
    e2z = vc[2] - va[2]
    px = d[1] * e2z - d[2] * e2y
    py = d[2] * e2x - d[0] * e2z
    pz = d[0] * e2y - d[1] * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < _DET_EPS:
        return -1.0
    inv = 1.0 / det
    tx = o[0] - va[0]
    ty = o[1] - va[1]
    tz = o[2] - va[2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (d[0] * qx + d[1] * qy + d[2] * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t > MIN_T:
        return t
    return -1.0


@njit(cache=True)
def _raycast_kernel(node_min, node_max, node_left, node_right, node_start,
                    node_count, tri_id, v0, v1, v2, origins, dirs):
    n_rays = origins.shape[0]
    out_t = np.full(n_rays, np.inf)
    out_id = np.full(n_rays, -1, dtype=np.int64)
    stack = np.empty(_STACK_DEPTH, dtype=np.int32)
    inv_d = np.empty(3)
    for r in range(n_rays):
        o = origins[r]
        d = dirs[r]
        for k in range(3):
            inv_d[k] = 1.0 / d[k] if d[k] != 0.0 else np.inf
        best_t = np.inf
        best_id = -1
        sp = 0
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            tmin, tmax = _slab(node_min[node], node_max[node], o, inv_d, d)
            # `tmin <= best_t` (not <) keeps equal-distance candidates visitable
            if tmax < max(tmin, MIN_T) or tmin > best_t:
                continue
            cnt = node_count[node]
            if cnt > 0:
                start = node_start[node]
                for i in range(start, start + cnt):
                    t = _ray_tri(o, d, v0[i], v1[i], v2[i])
                    if t > 0.0:
                        tid = tri_id[i]
                        if t < best_t or (t == best_t and tid < best_id):
                            best_t = t
                            best_id = tid
            else:
                stack[sp] = node_left[node]
                stack[sp + 1] = node_right[node]
                sp += 2
        out_t[r] = best_t
        out_id[r] = best_id
    return out_t, out_id


@njit(cache=True)
def _count_kernel(node_min, node_max, node_left, node_right, node_start,
                  node_count, v0, v1, v2, origins, dirs):
    n_rays = origins.shape[0]
    out = np.zeros(n_rays, dtype=np.int64)
    stack = np.empty(_STACK_DEPTH, dtype=np.int32)
    inv_d = np.empty(3)
    for r in range(n_rays):
        o = origins[r]
        d = dirs[r]
        for k in range(3):
            inv_d[k] = 1.0 / d[k] if d[k] != 0.0 else np.inf
        count = 0
        sp = 0
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            node = stack[sp]
            tmin, tmax = _slab(node_min[node], node_max[node], o, inv_d, d)
            if tmax < max(tmin, MIN_T):
                continue
            cnt = node_count[node]
            if cnt > 0:
                start = node_start[node]
                for i in range(start, start + cnt):
                    if _ray_tri(o, d, v0[i], v1[i], v2[i]) > 0.0:
                        count += 1
            else:
                stack[sp] = node_left[node]
                stack[sp + 1] = node_right[node]
                sp += 2
        out[r] = count
    return out
