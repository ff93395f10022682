"""Stepping environment over the kinematic world, scripted-expert controller,
and the seed-disciplined evaluation harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GraspFailureError, InvalidArgumentError, PathCollisionError
from ..geometry import Pose
from ..grasping import GripperModel
from .rollout import (GenConfig, ScriptedExpert, camera_rig, evaluate_success,
                      expected_final_pose, start_pose, wrist_camera)
from .scene import PRIMARY_ROLE, MeshPool, sample_scene
from .task import TaskSpec
from .world import KinematicWorld


@dataclass(frozen=True)
class Obs:
    cloud: np.ndarray | None  # (cloud_size, 3) float32, None when not rendering
    ee_pose: np.ndarray  # (7,) float64
    gripper: float


class KinematicEnv:
    """reset/step interface used by the wire protocol and the eval harness.

    Gripper commands are absolute poses; the gripper scalar crosses 0.5 to
    close (attempting attachment of the primary object) or open (release and
    settle). The episode ends after a completed pick-and-release cycle or at
    max_steps; success is the pose-distance check at that point.
    """

    def __init__(self, task: TaskSpec, mesh_pool: MeshPool,
                 config: GenConfig = GenConfig(), render: bool = True,
                 criteria: str = "evaluation"):
        self.task = task
        self.mesh_pool = mesh_pool
        self.config = config
        self.render = render
        self.criteria = (task.evaluation_success if criteria == "evaluation"
                         else task.generation_success)
        self.world: KinematicWorld | None = None
        self._external = None
        self._rng = None
        self._steps = 0
        self._was_open = True
        self._ever_attached = False
        self._expected: Pose | None = None

    def reset(self, seed: int) -> Obs:
        from ..assets import make_table

        scene = sample_scene(self.task, self.mesh_pool, seed)
        self.scene = scene
        self.world = KinematicWorld(
            scene, self.mesh_pool, GripperModel(),
            make_table(size_x=self.config.table_size, size_y=self.config.table_size))
        self.world.set_gripper(start_pose(self.task))
        self.world.gripper_open = 1.0
        self._rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC10D]))
        self._steps = 0
        self._was_open = True
        self._ever_attached = False
        self._primary = self.world.find(PRIMARY_ROLE)
        self._expected = expected_final_pose(self.task, self.world)
        self._external = camera_rig(self.task, self.config)
        return self._observe()

    def step(self, ee_pose: np.ndarray, gripper: float) -> tuple[Obs, bool, bool]:
        if self.world is None:
            raise InvalidArgumentError("step before reset")
        pose = Pose.from_array(np.asarray(ee_pose, dtype=np.float64))
        self.world.set_gripper(pose)
        closing = self._was_open and gripper < 0.5
        opening = (not self._was_open) and gripper >= 0.5
        released = False
        if closing and self.world.attached is None:
            if self.world.try_attach(self._primary):
                self._ever_attached = True
        if opening and self.world.attached is not None:
            self.world.release()
            released = True
        self._was_open = gripper >= 0.5
        self.world.gripper_open = float(np.clip(gripper, 0.0, 1.0))
        self._steps += 1
        done = (released and self._ever_attached) or self._steps >= self.config.max_steps
        success = bool(done and self._evaluate())
        return self._observe(), done, success

    def _evaluate(self) -> bool:
        achieved = self.world.object_pose(self._primary)
        return evaluate_success(achieved, self._expected, self.criteria)

    def _observe(self) -> Obs:
        cloud = None
        if self.render:
            cams = [self._external, wrist_camera(self.world.gripper_pose, self.config)]
            cloud = self.world.render_cloud(cams, self.config.cloud_size, self._rng)
        return Obs(cloud, self.world.gripper_pose.to_array(),
                   self.world.gripper_open)


class ScriptedExpertController:
    """Privileged controller that replays the expert script through env.step."""

    def __init__(self, env: KinematicEnv):
        self.env = env
        self._steps: list[tuple[Pose, float]] = []
        self._i = 0

    def reset(self, obs: Obs) -> None:
        self._i = 0
        rng = np.random.default_rng(
            np.random.SeedSequence([self.env.scene.seed, 0xE87]))
        try:
            expert = ScriptedExpert(self.env.world, self.env.task,
                                    self.env.mesh_pool, self.env.config, rng)
            self._steps = expert.steps
        except (GraspFailureError, PathCollisionError):
            self._steps = []  # hold position; the episode times out unsuccessfully

    def act(self, obs: Obs) -> tuple[np.ndarray, float]:
        if self._i < len(self._steps):
            pose, grip = self._steps[self._i]
            self._i += 1
            return pose.to_array(), grip
        return obs.ee_pose, obs.gripper


@dataclass
class EvalReport:
    per_seed: list[tuple[int, int, int]] = field(default_factory=list)
    # entries: (seed, episodes, successes)

    @property
    def rates(self) -> list[float]:
        return [s / n for _, n, s in self.per_seed]

    @property
    def mean(self) -> float:
        return float(np.mean(self.rates))

    @property
    def std(self) -> float:
        return float(np.std(self.rates))  # population std across seeds

    def to_csv(self) -> str:
        lines = ["seed,episodes,successes,success_rate"]
        for seed, n, s in self.per_seed:
            lines.append(f"{seed},{n},{s},{s / n:.6f}")
        lines.append(f"mean,,,{self.mean:.6f}")
        lines.append(f"std,,,{self.std:.6f}")
        return "\n".join(lines) + "\n"


def episode_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def evaluate_policy(make_controller, task: TaskSpec, mesh_pool: MeshPool,
                    seeds: list[int], episodes_per_seed: int,
                    config: GenConfig = GenConfig(), render: bool = False
                    ) -> EvalReport:
    """Run `episodes_per_seed` episodes per seed and report success rates.

    `make_controller(env)` builds the controller (e.g.
    ScriptedExpertController). Deterministic: per-episode scenes derive from
    (seed, episode index) only.
    """
    if episodes_per_seed < 1:
        raise InvalidArgumentError("episodes_per_seed must be >= 1")
    report = EvalReport()
    for seed in seeds:
        env = KinematicEnv(task, mesh_pool, config, render=render)
        controller = make_controller(env)
        successes = 0
        for i in range(episodes_per_seed):
            obs = env.reset(episode_seed(seed, i))
            controller.reset(obs)
            for _ in range(config.max_steps):
                pose7, grip = controller.act(obs)
                obs, done, success = env.step(pose7, grip)
                if done:
                    successes += int(success)
                    break
        report.per_seed.append((seed, episodes_per_seed, successes))
    return report
