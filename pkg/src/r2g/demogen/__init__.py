from .env import (EvalReport, KinematicEnv, Obs, ScriptedExpertController,
                  episode_seed, evaluate_policy)
from .planner import (APPROACH_OFFSET, PLACE_CLEARANCE, interpolate_path,
                      plan_place, transfer_trajectory)
from .protocol import serve_stdio, serve_stream, serve_tcp
from .rollout import (DEFAULT_DENSITY, DemonstrationEpisode, EpisodeMeta, Frame,
                      GenConfig, GenerationStats, ScriptedExpert, camera_rig,
                      evaluate_success, expected_final_pose, generate_dataset,
                      rollout, start_pose, wrist_camera)
from .scene import (PRIMARY_ROLE, SECONDARY_ROLE, TABLE_ROLE, MeshPool, Scene,
                    SceneObject, sample_scene)
from .task import (SuccessCriteria, TaskSpec, TrajectoryTrack, load_task,
                   load_trajectory)
from .world import TABLE_HEIGHT, KinematicWorld, WorldObject

__all__ = [
    "APPROACH_OFFSET", "DEFAULT_DENSITY", "DemonstrationEpisode", "EpisodeMeta",
    "EvalReport", "Frame", "GenConfig", "GenerationStats", "KinematicEnv",
    "KinematicWorld", "MeshPool", "Obs", "PLACE_CLEARANCE", "PRIMARY_ROLE",
    "SECONDARY_ROLE", "Scene", "SceneObject", "ScriptedExpert",
    "ScriptedExpertController", "SuccessCriteria", "TABLE_HEIGHT", "TABLE_ROLE",
    "TaskSpec", "TrajectoryTrack", "WorldObject", "camera_rig", "episode_seed",
    "evaluate_policy", "evaluate_success", "expected_final_pose",
    "generate_dataset", "interpolate_path", "load_task", "load_trajectory",
    "plan_place", "rollout", "sample_scene", "serve_stdio", "serve_stream",
    "serve_tcp", "start_pose", "transfer_trajectory", "wrist_camera",
]
