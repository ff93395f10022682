import pathlib

import pytest

from r2g.assets import write_box_on_tray_bundle, write_roll_upright_bundle
from r2g.demogen import GenConfig, MeshPool, load_task
from r2g.geometry import load_obj
from r2g.grasping import GraspConfig, precompute_grasps, save_grasps


def _prepare_bundle(root: pathlib.Path, writer, n_samples=256):
    paths = writer(root)
    task = load_task(paths["task"])
    for mid in task.primary_mesh_ids:
        mesh = load_obj(root / "meshes" / f"{mid}.obj")
        save_grasps(precompute_grasps(mesh, GraspConfig(n_samples=n_samples)),
                    root / "meshes" / f"{mid}.grasps.json")
    return task, MeshPool.from_dirs(root / "meshes", root / "meshes"), paths


@pytest.fixture(scope="session")
def box_tray(tmp_path_factory):
    root = tmp_path_factory.mktemp("box_tray_bundle")
    return _prepare_bundle(root, write_box_on_tray_bundle)


@pytest.fixture(scope="session")
def roll_upright(tmp_path_factory):
    root = tmp_path_factory.mktemp("roll_bundle")
    return _prepare_bundle(root, write_roll_upright_bundle)


@pytest.fixture(scope="session")
def fast_config():
    """Small renders keep rollout-heavy tests quick."""
    return GenConfig(cloud_size=512, render_width=48, render_height=36)
