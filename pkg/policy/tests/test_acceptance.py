"""Acceptance suite for the policy package; one PASS/FAIL line per criterion.
Run with `pytest tests/test_acceptance.py -v -s`."""

import contextlib
import shutil
import subprocess
import time

import numpy as np
import pytest
import torch

from tests.conftest import GEN_FLAGS, R2G_CMD


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def test_cfm_gradient_check():
    from tests.test_cfm import test_finite_difference_gradients

    with criterion("cfm-gradient-check"):
        test_finite_difference_gradients()


def test_lr_schedule_closed_form():
    from r2g_policy.schedule import lr_at

    with criterion("lr-schedule"):
        peak, warmup, total = 3e-5, 5000, 20000
        assert lr_at(0, peak, warmup, total) == 0.0
        assert abs(lr_at(2500, peak, warmup, total) - 0.5 * peak) <= 1e-9
        assert abs(lr_at(5000, peak, warmup, total) - peak) <= 1e-9
        assert abs(lr_at(total, peak, warmup, total) - 0.0) <= 1e-9


@pytest.mark.slow
def test_overfit_and_replay(mini_dataset, serve_cmd, tmp_path):
    from r2g_policy.archive import load_dataset
    from r2g_policy.client import EnvClient
    from r2g_policy.eval import run_episode
    from r2g_policy.model import PolicyConfig, load_checkpoint
    from r2g_policy.train import train

    with criterion("overfit-replay"):
        start = time.monotonic()
        episodes = sorted(p for p in mini_dataset.iterdir() if p.is_dir())
        one = tmp_path / "one_episode"
        one.mkdir()
        shutil.copytree(episodes[0], one / episodes[0].name)
        import json
        scene_seed = json.loads(
            (one / episodes[0].name / "meta.json").read_text())["seed"]

        config = PolicyConfig(cloud_size=256, horizon=16, batch_size=32,
                              point_hidden=(32, 64), cond_dim=64,
                              field_hidden=(256, 256), warmup_steps=100,
                              total_steps=2000, lr=3e-3, ema_decay=0.98,
                              execute_k=8)
        result = train(one, config, tmp_path / "overfit.pt", seed=0,
                       log_every=0)
        initial = float(np.mean(result.losses[:5]))
        final = float(np.mean(result.losses[-50:]))
        assert final < 0.10 * initial, (initial, final)

        policy, _, _ = load_checkpoint(tmp_path / "overfit.pt")
        ok = False
        with EnvClient(command=serve_cmd) as client:
            for attempt in range(3):  # stochastic x0; allow a couple of draws
                gen = torch.Generator().manual_seed(attempt)
                if run_episode(client, policy, scene_seed, max_decisions=30,
                               generator=gen):
                    ok = True
                    break
        assert ok, "overfit policy failed to replay its training scene"
        elapsed = time.monotonic() - start
        assert elapsed < 300.0, f"overfit fixture took {elapsed:.0f}s"
        print(f"  (loss {initial:.3f} -> {final:.4f}, {elapsed:.0f}s)")


@pytest.mark.slow
def test_ablation_trend_smoke(mini_world, tmp_path):
    """Directional check: training on more demonstrations cannot be worse."""
    from r2g_policy.client import EnvClient
    from r2g_policy.eval import closed_loop_eval
    from r2g_policy.model import PolicyConfig, load_checkpoint
    from r2g_policy.train import train

    with criterion("ablation-trend"):
        big = tmp_path / "demos800"
        subprocess.run(R2G_CMD + [
            "generate", "--task", str(mini_world["task"]),
            "--mesh-dir", str(mini_world["meshes"]), "--out", str(big),
            "--n-demos", "800", "--seed", "7000"] + GEN_FLAGS, check=True,
            capture_output=True)
        small = tmp_path / "demos200"
        small.mkdir()
        episodes = sorted(p for p in big.iterdir() if p.is_dir())[:200]
        for p in episodes:
            shutil.copytree(p, small / p.name)

        config = PolicyConfig(cloud_size=256, horizon=16, batch_size=32,
                              point_hidden=(32, 64), cond_dim=64,
                              field_hidden=(256, 256), warmup_steps=100,
                              total_steps=1500, lr=3e-3, ema_decay=0.995,
                              execute_k=8)
        rates = {}
        for name, root in (("800", big), ("200", small)):
            train(root, config, tmp_path / f"p{name}.pt", seed=0, log_every=0)
            policy, _, _ = load_checkpoint(tmp_path / f"p{name}.pt")

            def factory():
                return EnvClient(command=R2G_CMD + [
                    "serve", "--task", str(mini_world["task"]),
                    "--mesh-dir", str(mini_world["meshes"])] + GEN_FLAGS)

            report = closed_loop_eval(factory, policy, seeds=[0, 1, 2],
                                      episodes_per_seed=12)
            rates[name] = report.mean
        print(f"  (success 800-demo {rates['800']:.1%} vs "
              f"200-demo {rates['200']:.1%})")
        assert rates["800"] >= rates["200"]
