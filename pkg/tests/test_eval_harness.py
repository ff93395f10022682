import numpy as np

from r2g.demogen import (KinematicEnv, ScriptedExpertController,
                         evaluate_policy)


class NoOpController:
    """Holds the start pose with the gripper open forever."""

    def __init__(self, env):
        pass

    def reset(self, obs):
        pass

    def act(self, obs):
        return obs.ee_pose, obs.gripper


class TestEvaluatePolicy:
    def test_scripted_expert_high_success(self, box_tray, fast_config):
        task, pool, _ = box_tray
        report = evaluate_policy(ScriptedExpertController, task, pool,
                                 seeds=[0, 1], episodes_per_seed=8,
                                 config=fast_config)
        assert len(report.per_seed) == 2
        assert report.mean > 0.7

    def test_noop_controller_zero_success(self, box_tray, fast_config):
        task, pool, _ = box_tray
        report = evaluate_policy(NoOpController, task, pool, seeds=[0],
                                 episodes_per_seed=10, config=fast_config)
        assert report.mean == 0.0

    def test_rerun_identical(self, box_tray, fast_config):
        task, pool, _ = box_tray
        a = evaluate_policy(ScriptedExpertController, task, pool, [3, 4], 6,
                            fast_config)
        b = evaluate_policy(ScriptedExpertController, task, pool, [3, 4], 6,
                            fast_config)
        assert a.per_seed == b.per_seed

    def test_csv_schema(self, box_tray, fast_config):
        task, pool, _ = box_tray
        report = evaluate_policy(ScriptedExpertController, task, pool, [0, 1, 2],
                                 2, fast_config)
        lines = report.to_csv().strip().splitlines()
        assert lines[0] == "seed,episodes,successes,success_rate"
        assert len(lines) == 1 + 3 + 2  # header + seeds + mean + std
        assert lines[-2].startswith("mean,")
        assert lines[-1].startswith("std,")
        # std is the population std of the per-seed rates
        rates = [float(l.split(",")[3]) for l in lines[1:4]]
        assert abs(float(lines[-1].split(",")[3]) - np.std(rates)) < 1e-6


class TestEnvSemantics:
    def test_expert_through_env_matches_rollout_outcome(self, box_tray, fast_config):
        from r2g.demogen import episode_seed, rollout, sample_scene

        task, pool, _ = box_tray
        env = KinematicEnv(task, pool, fast_config, render=False)
        controller = ScriptedExpertController(env)
        seed = episode_seed(0, 0)
        obs = env.reset(seed)
        controller.reset(obs)
        done = success = False
        for _ in range(fast_config.max_steps):
            pose7, grip = controller.act(obs)
            obs, done, success = env.step(pose7, grip)
            if done:
                break
        assert done
        scene = sample_scene(task, pool, seed)
        ep = rollout(scene, task, pool, seed, fast_config, criteria="evaluation",
                     record=False)
        assert success == ep.success

    def test_observation_shapes(self, box_tray, fast_config):
        task, pool, _ = box_tray
        env = KinematicEnv(task, pool, fast_config, render=True)
        obs = env.reset(1)
        assert obs.cloud.shape == (fast_config.cloud_size, 3)
        assert obs.cloud.dtype == np.float32
        assert obs.ee_pose.shape == (7,)
        obs2, done, success = env.step(obs.ee_pose, 1.0)
        assert obs2.cloud.shape == (fast_config.cloud_size, 3)
        assert not done
