"""Scripted-expert rollouts, success evaluation, and dataset generation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import (GenerationStalledError, GraspFailureError,
                      InvalidArgumentError, PathCollisionError,
                      SceneSamplingFailedError)
from ..geometry import PinholeCamera, Pose, look_at_pose, quat_rotate
from ..grasping import Grasp
from .planner import APPROACH_OFFSET, interpolate_path, plan_place, transfer_trajectory
from .scene import PRIMARY_ROLE, SECONDARY_ROLE, MeshPool, Scene, sample_scene
from .task import SuccessCriteria, TaskSpec
from .world import TABLE_HEIGHT, KinematicWorld

logger = logging.getLogger(__name__)

DEFAULT_DENSITY = 1000.0  # kg/m^3, recorded for downstream physics use


@dataclass(frozen=True)
class GenConfig:
    cloud_size: int = 4096
    render_width: int = 64
    render_height: int = 48
    fov_deg: float = 60.0
    control_step: float = 0.025  # m per control step (20 Hz at 0.5 m/s)
    control_rot_step: float = 0.15  # rad per control step
    external_cam_distance: float = 1.0
    external_cam_pitch_deg: float = 45.0
    wrist_cam_setback: float = 0.10  # m behind the fingertip plane
    retreat: float = 0.10
    max_steps: int = 240
    table_size: float = 1.2
    grasp_clearance: float = 0.005

    def __post_init__(self):
        if self.cloud_size < 1 or self.control_step <= 0 or self.max_steps < 1:
            raise InvalidArgumentError("invalid generation config")


@dataclass(frozen=True)
class Frame:
    cloud: np.ndarray  # (cloud_size, 3) float32
    ee_pose: np.ndarray  # (7,) float32, pos + quat wxyz
    gripper: float

    def __post_init__(self):
        c = np.ascontiguousarray(self.cloud, dtype=np.float32).reshape(-1, 3)
        e = np.ascontiguousarray(self.ee_pose, dtype=np.float32).reshape(7)
        c.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "cloud", c)
        object.__setattr__(self, "ee_pose", e)
        object.__setattr__(self, "gripper", float(np.float32(self.gripper)))


@dataclass(frozen=True)
class EpisodeMeta:
    task: str
    seed: int
    mesh_ids: tuple[str, ...]
    thresholds: SuccessCriteria
    density_kg_m3: float = DEFAULT_DENSITY


@dataclass(frozen=True)
class DemonstrationEpisode:
    frames: tuple[Frame, ...]
    expected_final_pose: Pose
    achieved_final_pose: Pose
    success: bool
    meta: EpisodeMeta

    def __post_init__(self):
        if not self.frames:
            raise InvalidArgumentError("episode has no frames")
        sizes = {len(f.cloud) for f in self.frames}
        if len(sizes) != 1:
            raise InvalidArgumentError(f"inconsistent cloud sizes {sizes}")
        object.__setattr__(self, "frames", tuple(self.frames))

    @property
    def points_per_cloud(self) -> int:
        return len(self.frames[0].cloud)


def evaluate_success(achieved: Pose, expected: Pose, criteria: SuccessCriteria,
                     rotation_mode: str = "up_axis") -> bool:
    """Pose-distance success check.

    Position uses the Euclidean norm. Rotation compares the object up-axes
    (frame +z mapped to world) by default; "geodesic" switches to the full
    rotation angle.
    """
    if criteria.position_threshold is not None:
        d = float(np.linalg.norm(achieved.position - expected.position))
        if d > criteria.position_threshold:
            return False
    if criteria.rotation_threshold is not None:
        if rotation_mode == "up_axis":
            za = quat_rotate(achieved.quaternion, np.array([0.0, 0.0, 1.0]))
            ze = quat_rotate(expected.quaternion, np.array([0.0, 0.0, 1.0]))
            ang = np.degrees(np.arccos(np.clip(float(np.dot(za, ze)), -1.0, 1.0)))
        elif rotation_mode == "geodesic":
            from ..geometry import quat_angle
            ang = np.degrees(quat_angle(achieved.quaternion, expected.quaternion))
        else:
            raise InvalidArgumentError(f"unknown rotation mode {rotation_mode!r}")
        if ang > criteria.rotation_threshold:
            return False
    return True


def start_pose(task: TaskSpec, height: float = 0.30) -> Pose:
    """Deterministic gripper home: above the workspace center, looking down."""
    cx = 0.5 * (task.workspace_x[0] + task.workspace_x[1])
    cy = 0.5 * (task.workspace_y[0] + task.workspace_y[1])
    return Pose([cx, cy, height], [0.0, 1.0, 0.0, 0.0])


def camera_rig(task: TaskSpec, config: GenConfig) -> PinholeCamera:
    """The fixed external camera overlooking the workspace center."""
    cx = 0.5 * (task.workspace_x[0] + task.workspace_x[1])
    cy = 0.5 * (task.workspace_y[0] + task.workspace_y[1])
    pitch = np.radians(config.external_cam_pitch_deg)
    pos = np.array([cx - config.external_cam_distance * np.cos(pitch), cy,
                    config.external_cam_distance * np.sin(pitch)])
    pose = look_at_pose(pos, np.array([cx, cy, 0.0]))
    fy = (config.render_height / 2.0) / np.tan(np.radians(config.fov_deg) / 2.0)
    return PinholeCamera(fy, fy, (config.render_width - 1) / 2.0,
                         (config.render_height - 1) / 2.0,
                         config.render_width, config.render_height, pose)


def wrist_camera(gripper_pose: Pose, config: GenConfig) -> PinholeCamera:
    pose = gripper_pose.compose(Pose([0.0, 0.0, -config.wrist_cam_setback]))
    fy = (config.render_height / 2.0) / np.tan(np.radians(config.fov_deg) / 2.0)
    return PinholeCamera(fy, fy, (config.render_width - 1) / 2.0,
                         (config.render_height - 1) / 2.0,
                         config.render_width, config.render_height, pose)


def expected_final_pose(task: TaskSpec, world: KinematicWorld) -> Pose:
    """Where the primary object should end up for this scene."""
    primary = world.objects[world.find(PRIMARY_ROLE)]
    if task.has_secondary:
        secondary = world.objects[world.find(SECONDARY_ROLE)]
        sec_top = float(secondary.world_aabb()[1][2])
        bottom = float(primary.world_aabb()[0][2])
        height_of_origin = primary.pose.position[2] - bottom
        target = secondary.pose.position.copy()
        return Pose([target[0], target[1], sec_top + height_of_origin],
                    primary.pose.quaternion)
    final_rel = task.trajectory.relative_poses[-1]
    return final_rel.compose(primary.pose)


class ScriptedExpert:
    """Plans the full pick-and-transfer script for one scene.

    Produces (pose, gripper) control steps; raises GraspFailureError or
    PathCollisionError when no feasible script exists.
    """

    def __init__(self, world: KinematicWorld, task: TaskSpec, mesh_pool: MeshPool,
                 config: GenConfig, rng: np.random.Generator):
        self.world = world
        self.task = task
        self.config = config
        primary_idx = world.find(PRIMARY_ROLE)
        primary = world.objects[primary_idx]
        grasp_set = mesh_pool.grasp_set(primary.mesh.id)
        if grasp_set is None or not grasp_set.grasps:
            raise GraspFailureError(f"no grasp set for mesh {primary.mesh.id!r}")

        grasp = self._pick_grasp(grasp_set.grasps, primary.pose, primary_idx, rng)
        self.grasp_width = grasp.width
        open_width = grasp.width + config.grasp_clearance
        g = grasp.pose
        home = start_pose(task)
        pre = Pose(g.position + [0.0, 0.0, APPROACH_OFFSET], g.quaternion)

        if task.has_secondary:
            secondary = world.objects[world.find(SECONDARY_ROLE)]
            waypoints = plan_place(
                primary.pose, secondary.pose, g, task,
                primary_vertices=primary.pose.apply(primary.mesh.vertices),
                secondary_top=float(secondary.world_aabb()[1][2]),
                table_height=TABLE_HEIGHT)
            approach_wps = [home] + waypoints[:2]
            transport_wps = waypoints[1:]
        else:
            approach_wps = [home, pre, g]
            transport_wps = transfer_trajectory(task.trajectory, g)

        # approaching: only object triangles between the fingers are excused;
        # carrying: the attached object is exempt outright
        approach = interpolate_path(
            approach_wps, config.control_step, world,
            rot_step=config.control_rot_step, open_width=open_width,
            exempt_index=primary_idx, exempt_corridor_only=True)
        transport = interpolate_path(
            transport_wps, config.control_step, world,
            rot_step=config.control_rot_step, open_width=open_width,
            exempt_index=primary_idx)
        release_pose = transport[-1]
        retreat_target = Pose(release_pose.position + [0.0, 0.0, config.retreat],
                              release_pose.quaternion)
        retreat = interpolate_path(
            [release_pose, retreat_target], config.control_step, world,
            rot_step=config.control_rot_step, open_width=open_width,
            exempt_index=primary_idx, collision_check=False)

        # (pose, gripper command) control steps; gripper 1 = open, 0 = closed
        self.steps: list[tuple[Pose, float]] = []
        self.steps += [(p, 1.0) for p in approach]
        self.steps.append((approach[-1], 0.0))  # close
        self.steps += [(p, 0.0) for p in transport[1:]]
        self.steps.append((release_pose, 1.0))  # open
        self.steps += [(p, 1.0) for p in retreat[1:]]

    def _pick_grasp(self, grasps: list[Grasp], primary_pose: Pose,
                    primary_idx: int, rng: np.random.Generator) -> Grasp:
        """Uniformly random feasible grasp: first collision-free candidate in
        a uniformly shuffled order."""
        order = rng.permutation(len(grasps))
        for k in order:
            g = grasps[int(k)]
            world_pose = primary_pose.compose(g.pose)
            if self.world.gripper_collision_free(
                    world_pose, g.width + self.config.grasp_clearance,
                    exempt_index=primary_idx, corridor_only=True):
                return Grasp(g.contact_a, g.contact_b, g.width, world_pose, g.quality)
        raise GraspFailureError("no collision-free grasp in the stored set")


def rollout(scene: Scene, task: TaskSpec, mesh_pool: MeshPool, seed: int,
            config: GenConfig = GenConfig(), criteria: str = "generation",
            record: bool = True) -> DemonstrationEpisode:
    """Execute the scripted expert in a fresh world for `scene`.

    Returns the episode with its success flag (false counts as a
    success-check failure); raises GraspFailureError / PathCollisionError when
    the script cannot be built or the fingers close on air.
    """
    from ..assets import make_table
    from ..grasping import GripperModel

    world = KinematicWorld(scene, mesh_pool, GripperModel(),
                           make_table(size_x=config.table_size, size_y=config.table_size))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC10D]))
    expert = ScriptedExpert(world, task, mesh_pool, config, rng)
    expected = expected_final_pose(task, world)
    external = camera_rig(task, config)
    primary_idx = world.find(PRIMARY_ROLE)

    frames: list[Frame] = []
    was_open = True
    for pose, grip in expert.steps:
        world.set_gripper(pose)
        closing = was_open and grip < 0.5
        opening = (not was_open) and grip >= 0.5
        if closing:
            world.open_width = expert.grasp_width + config.grasp_clearance
            world.attach_or_fail(primary_idx)
        if opening:
            world.release()
        was_open = grip >= 0.5
        if record:
            cloud = world.render_cloud([external, wrist_camera(pose, config)],
                                       config.cloud_size, rng)
            frames.append(Frame(cloud, pose.to_array(), grip))

    if not record:  # keep episodes well-formed for non-recording runs
        frames.append(Frame(np.zeros((config.cloud_size, 3), dtype=np.float32),
                            expert.steps[-1][0].to_array(), 1.0))

    achieved = world.object_pose(primary_idx)
    crit = (task.generation_success if criteria == "generation"
            else task.evaluation_success)
    success = evaluate_success(achieved, expected, crit)
    mesh_ids = tuple(obj.mesh_id for obj in scene.objects)
    return DemonstrationEpisode(
        frames=tuple(frames),
        expected_final_pose=expected,
        achieved_final_pose=achieved,
        success=success,
        meta=EpisodeMeta(task.name, scene.seed, mesh_ids, crit),
    )


@dataclass
class GenerationStats:
    requested: int
    written: int = 0
    attempts: int = 0
    scene_failures: int = 0
    grasp_failures: int = 0
    path_collisions: int = 0
    success_check_failures: int = 0
    episode_ids: list[str] = field(default_factory=list)

    @property
    def success_fraction(self) -> float:
        return self.written / self.attempts if self.attempts else 0.0

    def to_json(self) -> dict:
        return {
            "requested": self.requested, "written": self.written,
            "attempts": self.attempts, "scene_failures": self.scene_failures,
            "grasp_failures": self.grasp_failures,
            "path_collisions": self.path_collisions,
            "success_check_failures": self.success_check_failures,
            "success_fraction": self.success_fraction,
            "episode_ids": self.episode_ids,
        }


def _attempt(task: TaskSpec, mesh_pool: MeshPool, seed: int, config: GenConfig,
             out_root) -> tuple[str, str | None]:
    """Run one generation attempt; returns (outcome, episode_id or None)."""
    from ..dataset import write_episode

    try:
        scene = sample_scene(task, mesh_pool, seed)
    except SceneSamplingFailedError:
        return "scene", None
    try:
        episode = rollout(scene, task, mesh_pool, seed, config, "generation")
    except GraspFailureError:
        return "grasp", None
    except PathCollisionError:
        return "path", None
    if not episode.success:
        return "check", None
    return "success", write_episode(episode, out_root)


def generate_dataset(task: TaskSpec, n_demos: int, mesh_pool: MeshPool,
                     base_seed: int, out_root, config: GenConfig = GenConfig(),
                     jobs: int = 1, stall_floor: float = 0.01,
                     stall_window: int = 1000) -> GenerationStats:
    """Write n_demos successful episodes, attempting seeds base_seed upward.

    Raises GenerationStalledError if the success fraction sits below
    `stall_floor` once `stall_window` attempts have been made. With jobs > 1,
    attempts run in a process pool; the resulting archive is byte-identical to
    a serial run.
    """
    if n_demos < 1:
        raise InvalidArgumentError("n_demos must be >= 1")
    stats = GenerationStats(requested=n_demos)

    def fold(seed: int, outcome: str, episode_id: str | None) -> bool:
        """Account one attempt; returns True when the dataset is complete."""
        stats.attempts += 1
        if outcome == "scene":
            stats.scene_failures += 1
        elif outcome == "grasp":
            stats.grasp_failures += 1
        elif outcome == "path":
            stats.path_collisions += 1
        elif outcome == "check":
            stats.success_check_failures += 1
        else:
            stats.written += 1
            stats.episode_ids.append(episode_id)
        if stats.attempts >= stall_window and stats.success_fraction < stall_floor:
            raise GenerationStalledError(
                f"success fraction {stats.success_fraction:.3%} after "
                f"{stats.attempts} attempts")
        return stats.written >= n_demos

    if jobs <= 1:
        seed = base_seed
        while True:
            outcome, episode_id = _attempt(task, mesh_pool, seed, config, out_root)
            if fold(seed, outcome, episode_id):
                break
            seed += 1
        return stats

    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    import shutil
    from pathlib import Path

    worker = partial(_attempt, task, mesh_pool, config=config, out_root=out_root)
    seed = base_seed
    done = False
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        while not done:
            block = list(range(seed, seed + jobs * 4))
            seed += len(block)
            results = list(pool.map(worker, block))
            for s, (outcome, episode_id) in zip(block, results):
                if done:
                    if episode_id:  # surplus success from this block
                        shutil.rmtree(Path(out_root) / episode_id)
                    continue
                done = fold(s, outcome, episode_id)
    return stats
