"""Waypoint planning and straight-line Cartesian interpolation."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgumentError, PathCollisionError
from ..geometry import Pose, quat_angle, quat_slerp
from .task import TaskSpec, TrajectoryTrack
from .world import KinematicWorld

APPROACH_OFFSET = 0.10  # m above the grasp for the pre-grasp waypoint
PLACE_CLEARANCE = 0.005  # m between object bottom and support at release


def transfer_trajectory(track: TrajectoryTrack, grasp_world: Pose) -> list[Pose]:
    """Apply the demonstration's world-frame relative poses to the grasp."""
    return [rel.compose(grasp_world) for rel in track.relative_poses]


def plan_place(primary_pose: Pose, secondary_pose: Pose, grasp_world: Pose,
               task: TaskSpec, *, primary_vertices: np.ndarray,
               secondary_top: float, table_height: float = 0.0) -> list[Pose]:
    """Bottleneck place template: pre-grasp, grasp, lift, translate over the
    secondary's centroid, lower to the secondary's top plus clearance.

    Orientation stays at the grasp orientation throughout. `primary_vertices`
    are the primary mesh's world-frame vertices at grasp time, used to figure
    the lowering depth.
    """
    if not task.has_secondary:
        raise InvalidArgumentError("plan_place requires a secondary object")
    q = grasp_world.quaternion
    g = grasp_world.position
    pre = Pose(g + [0.0, 0.0, APPROACH_OFFSET], q)
    lift_z = table_height + task.bottleneck_height
    lift = Pose([g[0], g[1], lift_z], q)
    sec_centroid = secondary_pose.apply(np.zeros(3))  # secondary rests centered
    over = Pose([sec_centroid[0], sec_centroid[1], lift_z], q)
    # while attached, the object's bottom tracks the gripper z rigidly
    gripper_rise = lift_z - g[2]
    bottom_at_over = primary_vertices[:, 2].min() + gripper_rise
    place_z = lift_z - (bottom_at_over - (secondary_top + PLACE_CLEARANCE))
    place = Pose([over.position[0], over.position[1], place_z], q)
    return [pre, grasp_world, lift, over, place]


def interpolate_path(waypoints: list[Pose], step: float, world: KinematicWorld,
                     *, rot_step: float = 0.1, open_width: float | None = None,
                     exempt_index: int | None = None,
                     exempt_corridor_only: bool = False,
                     collision_check: bool = True) -> list[Pose]:
    """Dense path with linear positions and shortest-arc quaternion slerp.

    Each segment is split so increments stay within `step` meters and
    `rot_step` radians; every pose is collision-checked (gripper vs world,
    grasped object exempt). Raises PathCollisionError naming the segment.
    """
    if len(waypoints) < 2:
        raise InvalidArgumentError("need at least two waypoints")
    if step <= 0 or rot_step <= 0:
        raise InvalidArgumentError("interpolation steps must be positive")
    width = world.gripper.max_width if open_width is None else open_width
    out = [waypoints[0]]
    if collision_check and not world.gripper_collision_free(
            waypoints[0], width, exempt_index, exempt_corridor_only):
        raise PathCollisionError("start pose in collision", 0)
    for seg in range(len(waypoints) - 1):
        a, b = waypoints[seg], waypoints[seg + 1]
        dist = float(np.linalg.norm(b.position - a.position))
        ang = quat_angle(a.quaternion, b.quaternion)
        n = max(int(np.ceil(dist / step)), int(np.ceil(ang / rot_step)), 1)
        for i in range(1, n + 1):
            t = i / n
            pose = Pose(a.position + t * (b.position - a.position),
                        quat_slerp(a.quaternion, b.quaternion, t))
            if collision_check and not world.gripper_collision_free(
                    pose, width, exempt_index, exempt_corridor_only):
                raise PathCollisionError(f"collision in segment {seg}", seg)
            out.append(pose)
    return out
