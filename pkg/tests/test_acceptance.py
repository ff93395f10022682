"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`."""

import contextlib
import hashlib
import json
import shutil
import time

import numpy as np
import pytest

from r2g.alignment import RansacParams, ransac_umeyama, umeyama
from r2g.geometry import quat_angle


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def random_similarity(rng, scale_range=(0.3, 3.0)):
    from r2g.geometry import SimilarityTransform, quat_normalize
    return SimilarityTransform(float(rng.uniform(*scale_range)),
                               quat_normalize(rng.normal(size=4)),
                               rng.uniform(-1, 1, size=3))


def test_umeyama_oracle():
    with criterion("umeyama-oracle"):
        start = time.monotonic()
        for trial in range(100):
            rng = np.random.default_rng(trial)
            truth = random_similarity(rng)
            src = rng.normal(size=(40, 3))
            tf = umeyama(src, truth.apply(src))
            assert abs(tf.scale - truth.scale) < 1e-7
            assert quat_angle(tf.rotation, truth.rotation) < 1e-7
            assert np.abs(tf.translation - truth.translation).max() < 1e-7
        for trial in range(100):
            rng = np.random.default_rng(10_000 + trial)
            truth = random_similarity(rng, (0.5, 2.0))
            src = rng.normal(size=(60, 3))
            noisy = truth.apply(src) + rng.normal(scale=1e-3, size=(60, 3))
            tf = umeyama(src, noisy)
            assert np.linalg.norm(tf.translation - truth.translation) < 5e-3
            assert np.degrees(quat_angle(tf.rotation, truth.rotation)) < 0.5
            assert abs(tf.scale / truth.scale - 1.0) < 0.01
        assert time.monotonic() - start < 5.0


def test_ransac_robustness():
    from r2g.alignment import CorrespondenceSet

    with criterion("ransac-robustness"):
        start = time.monotonic()
        for trial in range(50):
            rng = np.random.default_rng(777 + trial)
            truth = random_similarity(rng, (0.5, 2.0))
            src_in = rng.uniform(-0.1, 0.1, size=(12, 3))
            tgt_in = truth.apply(src_in)
            src_out = rng.uniform(-0.1, 0.1, size=(12, 3))
            tgt_out = rng.uniform(-0.3, 0.3, size=(12, 3))
            corr = CorrespondenceSet(
                np.concatenate([src_in, src_out]),
                np.concatenate([tgt_in, tgt_out]),
                np.linspace(1.0, 0.5, 24))
            params = RansacParams(iterations=300, inlier_threshold=0.005,
                                  min_inliers=6, seed=trial)
            tf, inliers = ransac_umeyama(corr, params)
            assert np.linalg.norm(tf.translation - truth.translation) < 1e-3
            assert np.degrees(quat_angle(tf.rotation, truth.rotation)) < 0.5
            assert abs(tf.scale / truth.scale - 1.0) < 0.01
            tf2, inliers2 = ransac_umeyama(corr, params)
            assert tf2.scale == tf.scale
            assert np.array_equal(tf2.rotation, tf.rotation)
            assert np.array_equal(tf2.translation, tf.translation)
            assert np.array_equal(inliers2, inliers)
        assert time.monotonic() - start < 30.0


def test_bvh_brute_force_equivalence():
    from tests.test_mesh_bvh import brute_force_raycast, random_soup
    from r2g.geometry import Bvh

    with criterion("bvh-brute-force"):
        for mesh_seed in (21, 22, 23):
            rng = np.random.default_rng(mesh_seed)
            mesh = random_soup(rng, 150)
            bvh = Bvh(mesh)
            origins = rng.uniform(-2, 2, size=(500, 3))
            dirs = rng.normal(size=(500, 3))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            t, tid = bvh.raycast_batch(origins, dirs)
            for r in range(500):
                bt, bid = brute_force_raycast(mesh, origins[r], dirs[r])
                assert tid[r] == bid
                if bid >= 0:
                    assert abs(t[r] - bt) < 1e-9


def test_self_alignment_fixture(tmp_path):
    from r2g.assets import (make_box, make_cylinder, make_tray,
                            write_alignment_fixture)
    from r2g.cli import main
    from r2g.geometry import save_obj

    with criterion("self-alignment"):
        meshes = [make_box("pbox", 0.05, 0.07, 0.04),
                  make_cylinder("pcyl", 0.02, 0.12, lying=True),
                  make_tray("ptray")]
        entries = []
        for mesh in meshes:
            save_obj(mesh, tmp_path / f"{mesh.id}.obj")
            entry = write_alignment_fixture(mesh, tmp_path / "desc")
            entries.append({"mesh": f"{mesh.id}.obj", **entry})
        config = {"out_dir": "aligned", "n_views": 41, "top_k": 30,
                  "meshes": entries}
        (tmp_path / "align.json").write_text(json.dumps(config))
        assert main(["align", "--config", str(tmp_path / "align.json")]) == 0
        for mesh in meshes:
            report = json.loads(
                (tmp_path / "aligned" / f"{mesh.id}.report.json").read_text())
            assert report["matched"], mesh.id
            assert abs(report["scale"] - 1.0) / 1.0 < 0.01, mesh.id
            ang = quat_angle(np.array(report["quaternion_wxyz"]),
                             np.array([1.0, 0, 0, 0]))
            assert np.degrees(ang) < 2.0, mesh.id


def test_antipodal_posthoc_audit():
    from r2g.assets import make_box, make_cylinder
    from r2g.grasping import GraspConfig, GripperModel, precompute_grasps

    with criterion("antipodal-audit"):
        gripper = GripperModel()
        cone = np.arctan(0.5)
        audited = 0
        for mesh in (make_box("cube", 0.04, 0.04, 0.04),
                     make_box("brick", 0.03, 0.05, 0.02),
                     make_cylinder("cyl", 0.02, 0.12)):
            gs = precompute_grasps(mesh, GraspConfig(n_samples=500, seed=0),
                                   gripper)
            for g in gs.grasps:
                u = g.contact_b.point - g.contact_a.point
                w = float(np.linalg.norm(u))
                u = u / w
                ang_a = np.arccos(np.clip(np.dot(u, -g.contact_a.normal), -1, 1))
                ang_b = np.arccos(np.clip(np.dot(-u, -g.contact_b.normal), -1, 1))
                assert ang_a <= cone + 1e-12 and ang_b <= cone + 1e-12
                assert w <= gripper.max_width + 1e-12
                audited += 1
        assert audited > 100
        cube = make_box("cube", 0.04, 0.04, 0.04)
        gs = precompute_grasps(cube, GraspConfig(n_samples=500, seed=0), gripper)
        axes = {int(np.argmax(np.abs(
            (g.contact_b.point - g.contact_a.point) / g.width)))
            for g in gs.grasps}
        assert axes == {0, 1, 2}


@pytest.mark.slow
def test_end_to_end_generation(tmp_path):
    from r2g.assets import write_box_on_tray_bundle
    from r2g.demogen import GenConfig, MeshPool, generate_dataset, load_task
    from r2g.geometry import load_obj
    from r2g.grasping import GraspConfig, precompute_grasps, save_grasps

    with criterion("end-to-end-800"):
        paths = write_box_on_tray_bundle(tmp_path, n_primary=5)
        task = load_task(paths["task"])
        for mid in task.primary_mesh_ids:
            mesh = load_obj(tmp_path / "meshes" / f"{mid}.obj")
            save_grasps(precompute_grasps(mesh, GraspConfig(n_samples=256)),
                        tmp_path / "meshes" / f"{mid}.grasps.json")
        pool = MeshPool.from_dirs(tmp_path / "meshes", tmp_path / "meshes")
        config = GenConfig()  # full 4096-point clouds

        def run(out):
            start = time.monotonic()
            stats = generate_dataset(task, 800, pool, base_seed=1000,
                                     out_root=out, config=config)
            elapsed = time.monotonic() - start
            digest = {}
            for p in sorted(out.rglob("*")):
                if p.is_file():
                    digest[str(p.relative_to(out))] = hashlib.sha256(
                        p.read_bytes()).hexdigest()
            return stats, elapsed, digest

        stats1, t1, d1 = run(tmp_path / "run1")
        assert stats1.written == 800
        assert stats1.success_fraction >= 0.80, stats1.to_json()
        assert t1 < 600.0, f"run took {t1:.0f}s"
        shutil.rmtree(tmp_path / "run1")
        stats2, t2, d2 = run(tmp_path / "run2")
        assert d1 == d2, "archives differ between identical runs"
        assert stats1.to_json() == stats2.to_json()
        print(f"  (800 demos in {t1:.0f}s / {t2:.0f}s, "
              f"attempt success {stats1.success_fraction:.1%})")


@pytest.mark.slow
def test_evaluation_harness(tmp_path):
    from r2g.assets import write_box_on_tray_bundle
    from r2g.demogen import (GenConfig, MeshPool, ScriptedExpertController,
                             evaluate_policy, load_task)
    from r2g.geometry import load_obj
    from r2g.grasping import GraspConfig, precompute_grasps, save_grasps

    with criterion("eval-harness"):
        paths = write_box_on_tray_bundle(tmp_path, n_primary=5)
        task = load_task(paths["task"])
        for mid in task.primary_mesh_ids:
            mesh = load_obj(tmp_path / "meshes" / f"{mid}.obj")
            save_grasps(precompute_grasps(mesh, GraspConfig(n_samples=256)),
                        tmp_path / "meshes" / f"{mid}.grasps.json")
        pool = MeshPool.from_dirs(tmp_path / "meshes", tmp_path / "meshes")
        config = GenConfig()
        seeds = [0, 1, 2]
        report = evaluate_policy(ScriptedExpertController, task, pool, seeds,
                                 100, config, render=False)
        assert len(report.per_seed) == 3
        assert all(n == 100 for _, n, _s in report.per_seed)
        csv_text = report.to_csv()
        assert "mean,,," in csv_text and "std,,," in csv_text
        again = evaluate_policy(ScriptedExpertController, task, pool, seeds,
                                100, config, render=False)
        assert again.per_seed == report.per_seed
        assert again.to_csv() == csv_text
        print(f"  (expert success {report.mean:.1%} +/- {report.std:.1%})")


def test_success_criteria_boundaries():
    from r2g.demogen import SuccessCriteria, evaluate_success
    from r2g.geometry import Pose

    with criterion("success-boundaries"):
        pos15 = SuccessCriteria(position_threshold=0.15)
        base = Pose([0.0, 0.0, 0.0])
        assert evaluate_success(base, base, pos15)
        assert not evaluate_success(Pose([0.16, 0, 0]), base, pos15)
        assert evaluate_success(Pose([0.14, 0, 0]), base, pos15)
        rot10 = SuccessCriteria(rotation_threshold=10.0)

        def tilted(deg):
            a = np.radians(deg) / 2
            return Pose([0, 0, 0], [np.cos(a), np.sin(a), 0, 0])

        assert not evaluate_success(tilted(11), base, rot10)
        assert evaluate_success(tilted(9), base, rot10)
        gen_roll = SuccessCriteria(position_threshold=0.05,
                                   rotation_threshold=10.0)
        assert not evaluate_success(Pose([0.06, 0, 0]), base, gen_roll)
        assert evaluate_success(Pose([0.04, 0, 0]), base, gen_roll)
