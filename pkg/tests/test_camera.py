import numpy as np
import pytest

from r2g.assets import make_icosphere
from r2g.errors import InvalidArgumentError, MalformedArchiveError
from r2g.geometry import (Bvh, DepthImage, PinholeCamera, Pose, TriMesh,
                          lift_pixels, look_at_pose, quat_normalize,
                          render_depth)


def identity_camera(w=64, h=48, f=50.0):
    return PinholeCamera(f, f, (w - 1) / 2, (h - 1) / 2, w, h, Pose.identity())


class TestProjection:
    def test_principal_point_lifts_on_axis(self):
        cam = identity_camera()
        depth = DepthImage(cam.width, cam.height,
                           np.full((cam.height, cam.width), 2.0, dtype=np.float32))
        pts, idx = lift_pixels(cam, depth, [(cam.cx, cam.cy)])
        assert np.allclose(pts, [[0, 0, 2.0]], atol=1e-6)
        assert list(idx) == [0]

    def test_project_lift_roundtrip(self):
        rng = np.random.default_rng(0)
        cam = PinholeCamera(80.0, 75.0, 31.0, 24.0, 64, 48,
                            Pose(rng.normal(size=3),
                                 quat_normalize(rng.normal(size=4))))
        local = np.stack([rng.uniform(-0.2, 0.2, 50), rng.uniform(-0.15, 0.15, 50),
                          rng.uniform(0.5, 3.0, 50)], axis=1)
        world = cam.pose.apply(local)
        uv, z = cam.project(world)
        depth_arr = np.full((48, 64), np.inf, dtype=np.float32)
        depth = DepthImage(64, 48, depth_arr)
        # lift with the true depth by passing exact float z through the array
        pts = []
        for (u, v), zz in zip(uv, z):
            d = np.full((48, 64), np.float64(zz))
            pts.append(lift_pixels(cam, DepthImage(64, 48, d), [(u, v)])[0][0])
        err = np.linalg.norm(np.array(pts) - world, axis=1).max()
        assert err < 1e-6
        del depth

    def test_translated_camera_shifts_lift(self):
        cam0 = identity_camera()
        cam1 = PinholeCamera(cam0.fx, cam0.fy, cam0.cx, cam0.cy, cam0.width,
                             cam0.height, Pose([1.0, 0, 0]))
        depth = DepthImage(cam0.width, cam0.height,
                           np.full((cam0.height, cam0.width), 1.5, dtype=np.float32))
        pix = [(3.0, 4.0), (40.0, 30.0)]
        a, _ = lift_pixels(cam0, depth, pix)
        b, _ = lift_pixels(cam1, depth, pix)
        assert np.allclose(b - a, [[1.0, 0, 0]] * 2, atol=1e-12)

    def test_unliftable_pixels_reported(self):
        cam = identity_camera(8, 8)
        d = np.full((8, 8), 2.0)
        d[3, 4] = np.inf
        depth = DepthImage(8, 8, d)
        pts, idx = lift_pixels(cam, depth, [(1, 1), (4, 3), (5, 5)])
        assert list(idx) == [0, 2]
        assert len(pts) == 2

    def test_out_of_bounds_pixel_rejected(self):
        cam = identity_camera(8, 8)
        depth = DepthImage(8, 8, np.full((8, 8), 1.0))
        with pytest.raises(InvalidArgumentError):
            lift_pixels(cam, depth, [(99, 0)])


class TestRenderDepth:
    def test_empty_scene_all_nonfinite(self):
        empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32), "e")
        img = render_depth(Bvh(empty), identity_camera(16, 12))
        assert not np.isfinite(img.depth).any()

    def test_quad_facing_camera_depth_constant(self):
        quad = TriMesh([[-0.5, -0.5, 2.0], [0.5, -0.5, 2.0],
                        [0.5, 0.5, 2.0], [-0.5, 0.5, 2.0]],
                       [[0, 1, 2], [0, 2, 3]], "quad")
        img = render_depth(Bvh(quad), identity_camera())
        covered = img.depth[np.isfinite(img.depth)]
        assert len(covered) > 50
        assert np.abs(covered - 2.0).max() < 1e-6

    def test_icosphere_center_pixel_depth(self):
        sphere = make_icosphere("s", 0.1, subdivisions=3)
        cam = PinholeCamera(60.0, 60.0, 32.0, 32.0, 65, 65,
                            Pose([0, 0, -1.0]))  # looking along +z at the sphere
        img = render_depth(Bvh(sphere), cam)
        assert abs(img.depth[32, 32] - 0.9) < 2e-3

    def test_rigid_invariance(self):
        sphere = make_icosphere("s", 0.1, subdivisions=2)
        cam = PinholeCamera(60.0, 60.0, 31.5, 23.5, 64, 48, Pose([0, 0.02, -0.8]))
        base = render_depth(Bvh(sphere), cam)
        rng = np.random.default_rng(7)
        rigid = Pose(rng.normal(size=3), quat_normalize(rng.normal(size=4)))
        moved = sphere.transformed(rigid)
        cam_moved = PinholeCamera(cam.fx, cam.fy, cam.cx, cam.cy, cam.width,
                                  cam.height, rigid.compose(cam.pose))
        out = render_depth(Bvh(moved), cam_moved)
        finite = np.isfinite(base.depth)
        assert np.array_equal(finite, np.isfinite(out.depth))
        assert np.abs(out.depth[finite] - base.depth[finite]).max() < 1e-6


class TestDepthImageFile:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        d = rng.uniform(0.5, 2.0, size=(12, 16)).astype(np.float32)
        d[0, 0] = np.inf
        img = DepthImage(16, 12, d)
        img.save(tmp_path / "x.depth")
        back = DepthImage.load(tmp_path / "x.depth")
        assert back.width == 16 and back.height == 12
        assert np.array_equal(
            np.nan_to_num(back.depth, posinf=0), np.nan_to_num(img.depth, posinf=0))

    def test_bad_magic(self, tmp_path):
        (tmp_path / "bad.depth").write_bytes(b"NOTDEPTH" + b"\0" * 16)
        with pytest.raises(MalformedArchiveError):
            DepthImage.load(tmp_path / "bad.depth")

    def test_truncated(self, tmp_path):
        img = DepthImage(4, 4, np.full((4, 4), 1.0, dtype=np.float32))
        img.save(tmp_path / "t.depth")
        raw = (tmp_path / "t.depth").read_bytes()
        (tmp_path / "t.depth").write_bytes(raw[:-8])
        with pytest.raises(MalformedArchiveError):
            DepthImage.load(tmp_path / "t.depth")

    def test_nonpositive_depth_rejected(self):
        with pytest.raises(InvalidArgumentError):
            DepthImage(2, 2, np.array([[1.0, -0.5], [1.0, 1.0]]))


def test_look_at_pose_points_at_target():
    pose = look_at_pose([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    z = pose.rotation()[:, 2]
    to_target = -np.array([1.0, 2.0, 3.0]) / np.linalg.norm([1.0, 2.0, 3.0])
    assert np.allclose(z, to_target, atol=1e-12)
    # y axis points downward in the world
    assert pose.rotation()[:, 1] @ np.array([0, 0, -1.0]) > 0
