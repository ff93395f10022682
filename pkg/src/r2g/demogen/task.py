"""Task definitions, success criteria, and recorded object trajectories."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from ..geometry import Pose

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


@dataclass(frozen=True)
class SuccessCriteria:
    position_threshold: float | None = None  # meters
    rotation_threshold: float | None = None  # degrees

    def __post_init__(self):
        if self.position_threshold is None and self.rotation_threshold is None:
            raise InvalidArgumentError("at least one success threshold required")
        for t in (self.position_threshold, self.rotation_threshold):
            if t is not None and t <= 0:
                raise InvalidArgumentError("success thresholds must be positive")

    def to_json(self) -> dict:
        out = {}
        if self.position_threshold is not None:
            out["position_m"] = self.position_threshold
        if self.rotation_threshold is not None:
            out["rotation_deg"] = self.rotation_threshold
        return out

    @staticmethod
    def from_json(raw: dict) -> "SuccessCriteria":
        return SuccessCriteria(raw.get("position_m"), raw.get("rotation_deg"))


@dataclass(frozen=True)
class TrajectoryTrack:
    """Object-centric trajectory: world-frame pose of the primary object at
    step t relative to its pose at step 0."""

    relative_poses: tuple[Pose, ...]
    timestamps: np.ndarray

    def __post_init__(self):
        if len(self.relative_poses) == 0:
            raise InvalidArgumentError("trajectory is empty")
        ts = np.array(self.timestamps, dtype=np.float64).reshape(-1)
        if len(ts) != len(self.relative_poses):
            raise InvalidArgumentError("timestamp count != pose count")
        first = self.relative_poses[0]
        if not first.is_close(Pose.identity(), 1e-9, 1e-9):
            raise InvalidArgumentError("first relative pose must be the identity")
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "relative_poses", tuple(self.relative_poses))

    def __len__(self) -> int:
        return len(self.relative_poses)


def load_trajectory(path: str | Path) -> TrajectoryTrack:
    raw = json.loads(Path(path).read_text())
    poses = tuple(Pose.from_array(np.array(p)) for p in raw["relative_poses"])
    return TrajectoryTrack(poses, np.array(raw["timestamps"]))


def object_frame_to_world_relative(track: TrajectoryTrack,
                                   initial_pose: Pose) -> TrajectoryTrack:
    """Convert relative poses expressed in the initial object frame into the
    world-frame convention used everywhere else.

    Object-frame: X_t = X_0 . rel_t. World-frame: X_t = rel'_t . X_0, so
    rel'_t = X_0 . rel_t . X_0^-1.
    """
    inv = initial_pose.invert()
    converted = tuple(initial_pose.compose(rel).compose(inv)
                      for rel in track.relative_poses)
    return TrajectoryTrack(converted, track.timestamps)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    has_secondary: bool
    primary_mesh_ids: tuple[str, ...]
    secondary_mesh_ids: tuple[str, ...]
    generation_success: SuccessCriteria
    evaluation_success: SuccessCriteria
    workspace_x: tuple[float, float]
    workspace_y: tuple[float, float]
    bottleneck_height: float = 0.15
    trajectory_path: Path | None = None
    trajectory: TrajectoryTrack | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.primary_mesh_ids:
            raise InvalidArgumentError("task needs at least one primary mesh id")
        if self.has_secondary and not self.secondary_mesh_ids:
            raise InvalidArgumentError("secondary task without secondary mesh ids")
        for lo, hi in (self.workspace_x, self.workspace_y):
            if not hi > lo:
                raise InvalidArgumentError("workspace ranges must be non-degenerate")
        if self.bottleneck_height <= 0:
            raise InvalidArgumentError("bottleneck height must be positive")
        if not self.has_secondary and self.trajectory is None:
            raise InvalidArgumentError("single-object task requires a trajectory")
        object.__setattr__(self, "primary_mesh_ids", tuple(self.primary_mesh_ids))
        object.__setattr__(self, "secondary_mesh_ids", tuple(self.secondary_mesh_ids))


def load_task(path: str | Path) -> TaskSpec:
    """Load a TaskSpec from a TOML or JSON config file."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        raw = tomllib.loads(path.read_text())
    else:
        raw = json.loads(path.read_text())
    try:
        traj = None
        traj_path = None
        if raw.get("trajectory"):
            traj_path = (path.parent / raw["trajectory"]).resolve()
            if not traj_path.exists():
                raise InvalidArgumentError(f"trajectory file not found: {traj_path}")
            traj = load_trajectory(traj_path)
        return TaskSpec(
            name=raw["name"],
            has_secondary=bool(raw["has_secondary"]),
            primary_mesh_ids=tuple(raw["primary_mesh_ids"]),
            secondary_mesh_ids=tuple(raw.get("secondary_mesh_ids", [])),
            generation_success=SuccessCriteria.from_json(raw["success"]["generation"]),
            evaluation_success=SuccessCriteria.from_json(raw["success"]["evaluation"]),
            workspace_x=tuple(raw["workspace"]["x"]),
            workspace_y=tuple(raw["workspace"]["y"]),
            bottleneck_height=float(raw.get("bottleneck_height", 0.15)),
            trajectory_path=traj_path,
            trajectory=traj,
        )
    except KeyError as exc:
        raise InvalidArgumentError(f"{path}: missing task config key {exc}") from exc
