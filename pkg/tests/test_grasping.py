import numpy as np
import pytest

from r2g.assets import make_box, make_cylinder, make_icosphere
from r2g.errors import EmptyGraspSetError, InvalidArgumentError
from r2g.grasping import (Grasp, GraspConfig, GripperModel, SurfaceSample,
                          antipodal_pairs, load_grasps, precompute_grasps,
                          sample_surface, save_grasps)


def sample(point, normal, tid=0):
    n = np.asarray(normal, dtype=float)
    return SurfaceSample(np.asarray(point, dtype=float),
                         n / np.linalg.norm(n), tid)


class TestSampleSurface:
    def test_cube_counts_multinomial(self):
        cube = make_box("c", 1.0, 1.0, 1.0)
        samples = sample_surface(cube, 6000, seed=0)
        # faces are triangle pairs (0,1), (2,3), ... in construction order
        per_face = np.zeros(6)
        for s in samples:
            per_face[s.triangle_id // 2] += 1
        sigma = np.sqrt(6000 * (1 / 6) * (5 / 6))
        assert np.abs(per_face - 1000).max() <= 3 * sigma

    def test_single_triangle(self):
        from r2g.geometry import TriMesh
        tri = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]], "t")
        samples = sample_surface(tri, 64, seed=1)
        assert all(s.triangle_id == 0 for s in samples)
        for s in samples:
            assert abs(s.point[2]) < 1e-12
            assert s.point[0] >= -1e-12 and s.point[1] >= -1e-12
            assert s.point[0] + s.point[1] <= 1 + 1e-12

    def test_deterministic(self):
        cube = make_box("c", 0.05, 0.05, 0.05)
        a = sample_surface(cube, 100, seed=7)
        b = sample_surface(cube, 100, seed=7)
        assert all(np.array_equal(x.point, y.point) and x.triangle_id == y.triangle_id
                   for x, y in zip(a, b))

    def test_normals_point_outward(self):
        sphere = make_icosphere("s", 0.05)
        for s in sample_surface(sphere, 200, seed=2):
            assert np.dot(s.normal, s.point) > 0  # sphere centered at origin

    def test_outward_even_with_flipped_winding(self):
        cube = make_box("c", 0.05, 0.05, 0.05)
        from r2g.geometry import TriMesh
        flipped = TriMesh(cube.vertices, cube.triangles[:, ::-1], "f")
        center = flipped.centroid
        for s in sample_surface(flipped, 120, seed=3):
            assert np.dot(s.normal, s.point - center) > 0

    def test_zero_samples_rejected(self):
        cube = make_box("c", 0.05, 0.05, 0.05)
        with pytest.raises(InvalidArgumentError):
            sample_surface(cube, 0)


class TestAntipodalPairs:
    gripper = GripperModel(max_width=0.08)

    def test_perfect_opposing_pair_accepted(self):
        a = sample([-0.02, 0, 0.02], [-1, 0, 0])
        b = sample([0.02, 0, 0.02], [1, 0, 0])
        grasps = antipodal_pairs([a, b], 0.5, self.gripper)
        assert len(grasps) == 1
        g = grasps[0]
        assert abs(g.width - 0.04) < 1e-12
        assert abs(g.quality - 1.0) < 1e-9
        assert np.allclose(g.pose.position, [0, 0, 0.02], atol=1e-12)

    def test_tilted_normals_rejected_outside_cone(self):
        # 30 deg tilt vs atan(0.5) ~ 26.57 deg half-angle
        tilt = np.radians(30)
        a = sample([-0.02, 0, 0], [-np.cos(tilt), np.sin(tilt), 0])
        b = sample([0.02, 0, 0], [np.cos(tilt), -np.sin(tilt), 0])
        assert antipodal_pairs([a, b], 0.5, self.gripper) == []

    def test_tilt_just_inside_cone_accepted(self):
        tilt = np.radians(25)
        a = sample([-0.02, 0, 0], [-np.cos(tilt), np.sin(tilt), 0])
        b = sample([0.02, 0, 0], [np.cos(tilt), -np.sin(tilt), 0])
        grasps = antipodal_pairs([a, b], 0.5, self.gripper)
        assert len(grasps) == 1
        assert 0 < grasps[0].quality < 1

    def test_width_gate(self):
        a = sample([-0.045, 0, 0], [-1, 0, 0])
        b = sample([0.045, 0, 0], [1, 0, 0])
        assert antipodal_pairs([a, b], 0.5, self.gripper) == []

    def test_pose_is_right_handed_orthonormal(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(40, 3)) * 0.02
        normals = rng.normal(size=(40, 3))
        samples = [sample(p, n) for p, n in zip(pts, normals)]
        for g in antipodal_pairs(samples, 0.9, self.gripper):
            m = g.pose.rotation()
            assert np.allclose(m @ m.T, np.eye(3), atol=1e-9)
            assert abs(np.linalg.det(m) - 1.0) < 1e-9
            # x axis is the closing direction
            u = (g.contact_b.point - g.contact_a.point) / g.width
            assert np.allclose(m[:, 0], u, atol=1e-9)
            # z axis prefers downward
            assert m[2, 2] <= 1e-9

    def test_posthoc_audit_inequalities(self):
        cube = make_box("audit", 0.04, 0.04, 0.04)
        samples = sample_surface(cube, 300, seed=5)
        mu = 0.5
        cone = np.arctan(mu)
        grasps = antipodal_pairs(samples, mu, self.gripper)
        assert grasps, "cube must yield grasps"
        for g in grasps:
            u = (g.contact_b.point - g.contact_a.point)
            w = np.linalg.norm(u)
            u = u / w
            ang_a = np.arccos(np.clip(np.dot(u, -g.contact_a.normal), -1, 1))
            ang_b = np.arccos(np.clip(np.dot(-u, -g.contact_b.normal), -1, 1))
            assert ang_a <= cone + 1e-12
            assert ang_b <= cone + 1e-12
            assert w <= self.gripper.max_width + 1e-12
            assert abs(g.width - w) < 1e-9

    def test_matches_brute_force_filter(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(30, 3)) * 0.02
        normals = rng.normal(size=(30, 3))
        samples = [sample(p, n) for p, n in zip(pts, normals)]
        mu = 0.7
        cone = np.arctan(mu)
        got = {(min(i, j), max(i, j)) for g in antipodal_pairs(samples, mu, self.gripper)
               for i, j in [(next(i for i, s in enumerate(samples)
                                  if np.array_equal(s.point, g.contact_a.point)),
                             next(i for i, s in enumerate(samples)
                                  if np.array_equal(s.point, g.contact_b.point)))]}
        expect = set()
        for i in range(30):
            for j in range(i + 1, 30):
                d = samples[j].point - samples[i].point
                w = np.linalg.norm(d)
                if w < 1e-6 or w > self.gripper.max_width:
                    continue
                u = d / w
                aa = np.arccos(np.clip(np.dot(u, -samples[i].normal), -1, 1))
                ab = np.arccos(np.clip(np.dot(-u, -samples[j].normal), -1, 1))
                if aa <= cone and ab <= cone:
                    expect.add((i, j))
        assert got == expect

    def test_nonpositive_friction_rejected(self):
        with pytest.raises(InvalidArgumentError):
            antipodal_pairs([], 0.0, self.gripper)


class TestPrecomputeGrasps:
    def test_cube_has_three_grasp_axes(self):
        cube = make_box("cube4", 0.04, 0.04, 0.04)
        gs = precompute_grasps(cube, GraspConfig(n_samples=400, seed=0))
        axes = set()
        for g in gs.grasps:
            u = np.abs((g.contact_b.point - g.contact_a.point) / g.width)
            axes.add(int(np.argmax(u)))
        assert axes == {0, 1, 2}

    def test_oversized_sphere_empty(self):
        sphere = make_icosphere("s6", 0.06)
        with pytest.raises(EmptyGraspSetError):
            precompute_grasps(sphere, GraspConfig(n_samples=300, seed=0))

    def test_cylinder_widths_near_diameter(self):
        cyl = make_cylinder("cyl", 0.02, 0.12)
        gs = precompute_grasps(cyl, GraspConfig(n_samples=800, seed=0))
        widths = np.array([g.width for g in gs.grasps])
        assert np.abs(widths - 0.04).max() < 2e-3

    def test_deterministic(self):
        cube = make_box("cube4", 0.04, 0.04, 0.04)
        a = precompute_grasps(cube, GraspConfig(n_samples=200, seed=3))
        b = precompute_grasps(cube, GraspConfig(n_samples=200, seed=3))
        assert len(a.grasps) == len(b.grasps)
        for x, y in zip(a.grasps, b.grasps):
            assert np.array_equal(x.pose.to_array(), y.pose.to_array())
            assert x.width == y.width

    def test_store_roundtrip(self, tmp_path):
        cube = make_box("cube4", 0.04, 0.04, 0.04)
        gs = precompute_grasps(cube, GraspConfig(n_samples=200, seed=1))
        save_grasps(gs, tmp_path / "g.json")
        back = load_grasps(tmp_path / "g.json")
        assert back.mesh_id == gs.mesh_id
        assert back.gripper == gs.gripper
        assert len(back.grasps) == len(gs.grasps)
        for x, y in zip(gs.grasps, back.grasps):
            assert abs(x.width - y.width) < 1e-12
            assert np.allclose(x.pose.to_array(), y.pose.to_array(), atol=1e-12)
            assert abs(x.quality - y.quality) < 1e-12


def test_gripper_model_validation():
    with pytest.raises(InvalidArgumentError):
        GripperModel(max_width=0.0)
    with pytest.raises(InvalidArgumentError):
        GripperModel(max_width=0.015, finger_thickness=0.01)
