"""Procedural primitive meshes and synthetic fixtures for the bundled tasks.

Canonical meshes produced here already satisfy simulation placement: centroid
on the z-axis, lowest vertex at z = 0.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .alignment import DescriptorSet
from .geometry import (DepthImage, PinholeCamera, SimilarityTransform,
                       TriMesh)

_DESC_DIM = 32


def make_box(mesh_id: str, sx: float, sy: float, sz: float) -> TriMesh:
    """Axis-aligned box resting on z = 0, centered in x/y."""
    x, y = sx / 2.0, sy / 2.0
    v = np.array([
        [-x, -y, 0], [x, -y, 0], [x, y, 0], [-x, y, 0],
        [-x, -y, sz], [x, -y, sz], [x, y, sz], [-x, y, sz],
    ])
    f = np.array([
        [0, 2, 1], [0, 3, 2],          # bottom
        [4, 5, 6], [4, 6, 7],          # top
        [0, 1, 5], [0, 5, 4],          # -y
        [2, 3, 7], [2, 7, 6],          # +y
        [1, 2, 6], [1, 6, 5],          # +x
        [3, 0, 4], [3, 4, 7],          # -x
    ], dtype=np.int32)
    return TriMesh(v, f, mesh_id)


def make_cylinder(mesh_id: str, radius: float, height: float, segments: int = 48,
                  lying: bool = False) -> TriMesh:
    """Closed cylinder. Upright: axis +z, base on z = 0. Lying: axis +y,
    resting on its side."""
    ang = 2 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    bottom = np.concatenate([ring, np.zeros((segments, 1))], axis=1)
    top = np.concatenate([ring, np.full((segments, 1), height)], axis=1)
    v = np.concatenate([bottom, top, [[0, 0, 0]], [[0, 0, height]]])
    faces = []
    cb, ct = 2 * segments, 2 * segments + 1
    for i in range(segments):
        j = (i + 1) % segments
        faces.append([i, j, segments + i])
        faces.append([j, segments + j, segments + i])
        faces.append([cb, j, i])
        faces.append([ct, segments + i, segments + j])
    mesh = TriMesh(v, np.array(faces, dtype=np.int32), mesh_id)
    if lying:
        # rotate axis from +z to +y, rest on the side
        rot = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=np.float64)
        v = mesh.vertices @ rot.T
        v = v - [v[:, 0].mean(), v[:, 1].mean(), v[:, 2].min()]
        mesh = TriMesh(v, mesh.triangles, mesh_id)
    return mesh


def make_icosphere(mesh_id: str, radius: float, subdivisions: int = 2,
                   rest_on_ground: bool = False) -> TriMesh:
    """Icosahedron subdivided and projected to a sphere centered at origin."""
    phi = (1 + np.sqrt(5)) / 2
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = [tuple(p) for p in v]
    index = {p: i for i, p in enumerate(verts)}

    def midpoint(a, b):
        m = tuple((np.array(verts[a]) + np.array(verts[b])) / 2
                  / np.linalg.norm((np.array(verts[a]) + np.array(verts[b])) / 2))
        if m not in index:
            index[m] = len(verts)
            verts.append(m)
        return index[m]

    for _ in range(subdivisions):
        nf = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
        f = nf
    pts = radius * np.array(verts)
    if rest_on_ground:
        pts = pts - [0, 0, pts[:, 2].min()]
    return TriMesh(pts, np.array(f, dtype=np.int32), mesh_id)


def make_tray(mesh_id: str, width: float = 0.24, depth: float = 0.28,
              wall_height: float = 0.03, wall_thickness: float = 0.01,
              floor_thickness: float = 0.008) -> TriMesh:
    """Open-top tray: floor slab plus four walls, resting on z = 0."""
    parts = [
        (make_box("f", width, depth, floor_thickness), (0, 0, 0)),
        (make_box("w0", width, wall_thickness, wall_height),
         (0, -(depth - wall_thickness) / 2, 0)),
        (make_box("w1", width, wall_thickness, wall_height),
         (0, (depth - wall_thickness) / 2, 0)),
        (make_box("w2", wall_thickness, depth, wall_height),
         (-(width - wall_thickness) / 2, 0, 0)),
        (make_box("w3", wall_thickness, depth, wall_height),
         ((width - wall_thickness) / 2, 0, 0)),
    ]
    verts = []
    faces = []
    offset = 0
    for mesh, shift in parts:
        verts.append(mesh.vertices + np.asarray(shift, dtype=np.float64))
        faces.append(mesh.triangles + offset)
        offset += len(mesh.vertices)
    return TriMesh(np.concatenate(verts), np.concatenate(faces), mesh_id)


def make_table(mesh_id: str = "table", size_x: float = 1.2, size_y: float = 1.2,
               thickness: float = 0.04) -> TriMesh:
    """Table slab whose top surface is the plane z = 0."""
    box = make_box(mesh_id, size_x, size_y, thickness)
    return TriMesh(box.vertices - [0, 0, thickness], box.triangles, mesh_id)


# ---------------------------------------------------------------------------
# synthetic descriptors: stand-ins for an external feature extractor


def _point_features(pts_unit: np.ndarray) -> np.ndarray:
    feats = [pts_unit]
    for freq in (1.0, 2.0, 4.0):
        feats.append(np.sin(2 * np.pi * freq * pts_unit))
        feats.append(np.cos(2 * np.pi * freq * pts_unit))
    return np.concatenate(feats, axis=1)


def synthetic_descriptors(mesh: TriMesh, camera: PinholeCamera, depth: DepthImage,
                          n_keypoints: int, seed: int,
                          to_canonical: SimilarityTransform | None = None
                          ) -> DescriptorSet:
    """Descriptors keyed on the canonical-frame 3D point each pixel sees.

    The same surface point yields the same descriptor from any viewpoint,
    which is exactly the property alignment needs from a real extractor.
    `to_canonical` maps the rendered (metric) frame back to mesh space when
    the rendered scene was transformed.
    """
    d = depth.depth
    vv, uu = np.nonzero(np.isfinite(d))
    if len(vv) == 0:
        raise ValueError("depth image is empty, cannot place keypoints")
    rng = np.random.default_rng(seed)
    pick = rng.choice(len(vv), size=min(n_keypoints, len(vv)), replace=False)
    pix = np.stack([uu[pick], vv[pick]], axis=1).astype(np.float64)
    z = d[vv[pick], uu[pick]].astype(np.float64)
    local = np.stack([(pix[:, 0] - camera.cx) * z / camera.fx,
                      (pix[:, 1] - camera.cy) * z / camera.fy, z], axis=1)
    world = camera.pose.apply(local)
    canonical = to_canonical.apply(world) if to_canonical is not None else world
    lo, hi = mesh.aabb
    unit = (canonical - lo) / np.maximum(hi - lo, 1e-9)
    proj = np.random.default_rng(9173).standard_normal((_point_features(unit).shape[1],
                                                        _DESC_DIM))
    desc = _point_features(unit) @ proj
    desc /= np.linalg.norm(desc, axis=1, keepdims=True)
    return DescriptorSet(pix, desc.astype(np.float32))


def reference_mask_from_depth(depth: DepthImage) -> np.ndarray:
    return np.isfinite(depth.depth)


def write_alignment_fixture(mesh: TriMesh, out_dir: str | Path,
                            render_cfg=None, reference_view: int = 7,
                            n_keypoints: int = 600, seed: int = 0) -> dict:
    """Self-alignment fixture: per-view descriptor files plus a reference
    observation taken from one of the mesh's own renders.

    Returns the mesh entry for an align config (paths relative to out_dir's
    parent so the config can sit next to the fixture).
    """
    from .alignment import ViewRenderConfig, camera_to_json, render_views, save_descriptors

    render_cfg = render_cfg or ViewRenderConfig()
    out_dir = Path(out_dir)
    views_dir = out_dir / mesh.id
    views_dir.mkdir(parents=True, exist_ok=True)
    rendered = render_views(mesh, render_cfg)
    for i, (_direction, camera, depth) in enumerate(rendered):
        desc = synthetic_descriptors(mesh, camera, depth, n_keypoints,
                                     seed=seed * 1000 + i)
        save_descriptors(desc, views_dir / f"view_{i:03d}.json")
    _, ref_cam, ref_depth = rendered[reference_view]
    ref_desc = synthetic_descriptors(mesh, ref_cam, ref_depth, n_keypoints,
                                     seed=seed * 1000 + 999)
    ref_depth.save(views_dir / "reference.depth")
    (views_dir / "reference_camera.json").write_text(
        json.dumps(camera_to_json(ref_cam)))
    save_descriptors(ref_desc, views_dir / "reference_descriptors.json")
    return {
        "views_dir": str(views_dir),
        "reference": {
            "camera": str(views_dir / "reference_camera.json"),
            "depth": str(views_dir / "reference.depth"),
            "descriptors": str(views_dir / "reference_descriptors.json"),
        },
    }


# ---------------------------------------------------------------------------
# bundled demonstration fixtures


def write_trajectory(path: str | Path, poses7: np.ndarray,
                     timestamps: np.ndarray) -> None:
    payload = {"timestamps": [float(t) for t in timestamps],
               "relative_poses": [[float(x) for x in p] for p in poses7]}
    Path(path).write_text(json.dumps(payload))


def upright_trajectory(lift: float = 0.10, final_hover: float = 0.005,
                       half_length: float = 0.06, demo_radius: float = 0.02,
                       steps: int = 24) -> np.ndarray:
    """World-frame relative poses that stand a lying roll (axis +y) upright.

    Mimics a demonstration recorded with the roll at the workspace origin:
    lift, rotate +90 deg about x so the axis +y maps to +z, descend until the
    lower cap hovers `final_hover` above the table.
    """
    out = [np.array([0, 0, 0, 1.0, 0, 0, 0])]
    for i in range(1, steps + 1):
        t = i / steps
        ang = 0.5 * np.pi * min(1.0, max(0.0, (t - 0.2) / 0.6))
        q = np.array([np.cos(ang / 2), np.sin(ang / 2), 0, 0])
        if t <= 0.2:
            dz = lift * (t / 0.2)
        elif t <= 0.8:
            dz = lift
        else:
            # demo center starts at demo_radius, ends at half_length + hover
            end_dz = half_length + final_hover - demo_radius
            dz = lift + (end_dz - lift) * ((t - 0.8) / 0.2)
        # rotate about the demo object's center (0, 0, demo_radius), then raise
        center = np.array([0.0, 0.0, demo_radius])
        rot = np.array([[1, 0, 0],
                        [0, np.cos(ang), -np.sin(ang)],
                        [0, np.sin(ang), np.cos(ang)]])
        t_rel = center + [0, 0, dz] - rot @ center
        out.append(np.array([t_rel[0], t_rel[1], t_rel[2], q[0], q[1], q[2], q[3]]))
    return np.array(out)


def write_box_on_tray_bundle(root: str | Path, n_primary: int = 5) -> dict:
    """Write the bundled pick-and-place fixture: boxes, one tray, task config.

    Returns a dict of the written paths.
    """
    from .geometry import save_obj

    root = Path(root)
    (root / "meshes").mkdir(parents=True, exist_ok=True)
    primary_ids = []
    rng = np.random.default_rng(7)
    for i in range(n_primary):
        sx, sy, sz = 0.035 + 0.01 * rng.random(3)
        mesh = make_box(f"box{i:02d}", float(sx), float(sy), float(sz))
        save_obj(mesh, root / "meshes" / f"{mesh.id}.obj")
        primary_ids.append(mesh.id)
    tray = make_tray("tray00")
    save_obj(tray, root / "meshes" / "tray00.obj")
    task = {
        "name": "box_on_tray",
        "has_secondary": True,
        "primary_mesh_ids": primary_ids,
        "secondary_mesh_ids": ["tray00"],
        "bottleneck_height": 0.15,
        "workspace": {"x": [-0.20, 0.20], "y": [-0.30, 0.30]},
        "success": {"generation": {"position_m": 0.15},
                    "evaluation": {"position_m": 0.15}},
    }
    task_path = root / "box_on_tray.json"
    task_path.write_text(json.dumps(task, indent=1))
    return {"task": task_path, "meshes": root / "meshes"}


def write_roll_upright_bundle(root: str | Path, n_primary: int = 3) -> dict:
    """Write the bundled single-object fixture: lying rolls plus the
    stand-upright trajectory."""
    from .geometry import save_obj

    root = Path(root)
    (root / "meshes").mkdir(parents=True, exist_ok=True)
    primary_ids = []
    rng = np.random.default_rng(11)
    half_length = 0.06
    for i in range(n_primary):
        r = 0.018 + 0.004 * rng.random()
        mesh = make_cylinder(f"roll{i:02d}", float(r), 2 * half_length, lying=True)
        save_obj(mesh, root / "meshes" / f"{mesh.id}.obj")
        primary_ids.append(mesh.id)
    track_path = root / "upright_track.json"
    poses = upright_trajectory(half_length=half_length)
    write_trajectory(track_path, poses, np.linspace(0.0, 3.0, len(poses)))
    task = {
        "name": "roll_upright",
        "has_secondary": False,
        "primary_mesh_ids": primary_ids,
        "secondary_mesh_ids": [],
        "trajectory": "upright_track.json",
        "bottleneck_height": 0.15,
        # world-frame relative poses transfer faithfully only near the
        # demonstrated spot, so spawns stay close to the demo location in y
        "workspace": {"x": [-0.15, 0.15], "y": [0.005, 0.035]},
        "success": {"generation": {"position_m": 0.05, "rotation_deg": 10.0},
                    "evaluation": {"rotation_deg": 10.0}},
    }
    task_path = root / "roll_upright.json"
    task_path.write_text(json.dumps(task, indent=1))
    return {"task": task_path, "meshes": root / "meshes", "trajectory": track_path}
