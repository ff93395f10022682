import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

R2G_CMD = [shutil.which("r2g")] if shutil.which("r2g") else [
    sys.executable, "-m", "r2g.cli"]


def write_box_obj(path: Path, sx: float, sy: float, sz: float) -> None:
    """Axis-aligned box resting on z=0 in the documented OBJ subset."""
    x, y = sx / 2, sy / 2
    verts = [(-x, -y, 0), (x, -y, 0), (x, y, 0), (-x, y, 0),
             (-x, -y, sz), (x, -y, sz), (x, y, sz), (-x, y, sz)]
    faces = [(1, 3, 2), (1, 4, 3), (5, 6, 7), (5, 7, 8),
             (1, 2, 6), (1, 6, 5), (3, 4, 8), (3, 8, 7),
             (2, 3, 7), (2, 7, 6), (4, 1, 5), (4, 5, 8)]
    lines = [f"v {a:.9g} {b:.9g} {c:.9g}" for a, b, c in verts]
    lines += [f"f {i} {j} {k}" for i, j, k in faces]
    path.write_text("\n".join(lines) + "\n")


MINI_TASK = {
    "name": "mini_place",
    "has_secondary": True,
    "primary_mesh_ids": ["cube00", "cube01"],
    "secondary_mesh_ids": ["slab00"],
    "bottleneck_height": 0.15,
    "workspace": {"x": [-0.18, 0.18], "y": [-0.25, 0.25]},
    "success": {"generation": {"position_m": 0.15},
                "evaluation": {"position_m": 0.15}},
}

GEN_FLAGS = ["--cloud-size", "256", "--render-width", "40",
             "--render-height", "30"]


def run_r2g(args):
    out = subprocess.run(R2G_CMD + args, capture_output=True, text=True)
    assert out.returncode == 0, f"r2g {' '.join(args)} failed:\n{out.stderr}"
    return out.stdout


@pytest.fixture(scope="session")
def mini_world(tmp_path_factory):
    """Meshes + task config + grasps, all through the generator CLI."""
    root = tmp_path_factory.mktemp("mini_world")
    meshes = root / "meshes"
    meshes.mkdir()
    write_box_obj(meshes / "cube00.obj", 0.04, 0.04, 0.04)
    write_box_obj(meshes / "cube01.obj", 0.035, 0.045, 0.05)
    write_box_obj(meshes / "slab00.obj", 0.24, 0.28, 0.02)
    task_path = root / "mini_place.json"
    task_path.write_text(json.dumps(MINI_TASK))
    run_r2g(["grasps", "--mesh-dir", str(meshes), "--samples", "200"])
    return {"root": root, "task": task_path, "meshes": meshes}


@pytest.fixture(scope="session")
def mini_dataset(mini_world):
    out = mini_world["root"] / "demos"
    run_r2g(["generate", "--task", str(mini_world["task"]),
             "--mesh-dir", str(mini_world["meshes"]), "--out", str(out),
             "--n-demos", "6", "--seed", "0", "--jobs", "1"] + GEN_FLAGS)
    return out


@pytest.fixture(scope="session")
def serve_cmd(mini_world):
    return R2G_CMD + ["serve", "--task", str(mini_world["task"]),
                      "--mesh-dir", str(mini_world["meshes"])] + GEN_FLAGS


@pytest.fixture(scope="session")
def tiny_policy_config():
    from r2g_policy.model import PolicyConfig

    return PolicyConfig(cloud_size=256, horizon=8, batch_size=16,
                        point_hidden=(32, 64), cond_dim=64,
                        field_hidden=(128, 128), warmup_steps=50,
                        total_steps=200, lr=1e-3)
