"""Bit-exact episode archive: one directory per episode, meta.json + frames.bin.

frames.bin layout (all little-endian):
  magic   7 bytes  b"R2GEPIS"
  u32     version (currently 1)
  u32     frame_count
  u32     points_per_cloud
  then per frame: cloud float32 n*3 row-major, ee_pose 7 float32
  (pos xyz, quat wxyz), gripper 1 float32.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from ..demogen.rollout import DemonstrationEpisode, EpisodeMeta, Frame
from ..demogen.task import SuccessCriteria
from ..errors import (InvalidArgumentError, MalformedArchiveError,
                      UnsupportedVersionError)
from ..geometry import Pose

MAGIC = b"R2GEPIS"
VERSION = 1
_HEADER = len(MAGIC) + 12  # magic + 3 * u32


def episode_id(episode: DemonstrationEpisode) -> str:
    return f"{episode.meta.task}-{episode.meta.seed:016d}"


def _pose_json(pose: Pose) -> dict:
    arr = pose.to_array()
    return {"position": arr[:3].tolist(), "quat_wxyz": arr[3:].tolist()}


def _pose_from_json(raw: dict) -> Pose:
    return Pose(np.array(raw["position"]), np.array(raw["quat_wxyz"]))


def write_episode(episode: DemonstrationEpisode, root: str | Path) -> str:
    """Persist one successful episode; returns its id.

    Failed episodes are rejected (only successful roll-outs are stored) and an
    existing id is never overwritten. The write is atomic: a temp directory is
    renamed into place.
    """
    if not episode.success:
        raise InvalidArgumentError("only successful episodes are stored")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    eid = episode_id(episode)
    final = root / eid
    if final.exists():
        raise InvalidArgumentError(f"episode id {eid!r} already exists, refusing overwrite")
    tmp = root / f".{eid}.tmp"
    if tmp.exists():
        raise InvalidArgumentError(f"stale temp directory {tmp} in the way")
    tmp.mkdir()
    n_pts = episode.points_per_cloud
    with open(tmp / "frames.bin", "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, len(episode.frames), n_pts))
        for frame in episode.frames:
            fh.write(frame.cloud.astype("<f4").tobytes())
            fh.write(frame.ee_pose.astype("<f4").tobytes())
            fh.write(struct.pack("<f", frame.gripper))
    meta = {
        "task": episode.meta.task,
        "seed": episode.meta.seed,
        "mesh_ids": list(episode.meta.mesh_ids),
        "success": episode.success,
        "thresholds": episode.meta.thresholds.to_json(),
        "expected_pose": _pose_json(episode.expected_final_pose),
        "achieved_pose": _pose_json(episode.achieved_final_pose),
        "frame_count": len(episode.frames),
        "points_per_cloud": n_pts,
        "density_kg_m3": episode.meta.density_kg_m3,
    }
    (tmp / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    os.replace(tmp, final)
    return eid


def read_episode(path: str | Path) -> DemonstrationEpisode:
    """Reconstruct an episode; validates header, sizes, and invariants."""
    path = Path(path)
    meta_raw = json.loads((path / "meta.json").read_text())
    raw = (path / "frames.bin").read_bytes()
    if len(raw) < _HEADER:
        raise MalformedArchiveError(f"{path}: header truncated", len(raw))
    if raw[: len(MAGIC)] != MAGIC:
        raise MalformedArchiveError(f"{path}: bad magic", 0)
    version, frame_count, n_pts = struct.unpack("<III", raw[len(MAGIC):_HEADER])
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: frames.bin version {version}")
    frame_bytes = 4 * (n_pts * 3 + 7 + 1)
    expected = _HEADER + frame_count * frame_bytes
    if len(raw) != expected:
        raise MalformedArchiveError(
            f"{path}: expected {expected} bytes, found {len(raw)}",
            min(len(raw), expected))
    if frame_count != meta_raw.get("frame_count"):
        raise MalformedArchiveError(f"{path}: meta frame count mismatch", _HEADER)
    frames = []
    off = _HEADER
    for _ in range(frame_count):
        cloud = np.frombuffer(raw, dtype="<f4", count=n_pts * 3, offset=off
                              ).reshape(n_pts, 3)
        off += 4 * n_pts * 3
        pose7 = np.frombuffer(raw, dtype="<f4", count=7, offset=off)
        off += 28
        (grip,) = struct.unpack_from("<f", raw, off)
        off += 4
        frames.append(Frame(cloud, pose7, grip))
    meta = EpisodeMeta(
        task=meta_raw["task"],
        seed=int(meta_raw["seed"]),
        mesh_ids=tuple(meta_raw["mesh_ids"]),
        thresholds=SuccessCriteria.from_json(meta_raw["thresholds"]),
        density_kg_m3=float(meta_raw.get("density_kg_m3", 1000.0)),
    )
    episode = DemonstrationEpisode(
        frames=tuple(frames),
        expected_final_pose=_pose_from_json(meta_raw["expected_pose"]),
        achieved_final_pose=_pose_from_json(meta_raw["achieved_pose"]),
        success=bool(meta_raw["success"]),
        meta=meta,
    )
    from ..demogen.rollout import evaluate_success

    if evaluate_success(episode.achieved_final_pose, episode.expected_final_pose,
                        meta.thresholds) != episode.success:
        raise MalformedArchiveError(
            f"{path}: stored success flag contradicts the pose thresholds", 0)
    return episode


def list_episodes(root: str | Path) -> list[Path]:
    root = Path(root)
    if not root.exists():
        raise InvalidArgumentError(f"dataset root {root} does not exist")
    return sorted(p for p in root.iterdir()
                  if p.is_dir() and (p / "frames.bin").exists())


def dataset_stats(root: str | Path) -> dict:
    """Deterministic summary of an archive tree."""
    episodes = list_episodes(root)
    per_task: dict[str, int] = {}
    frames = 0
    points = set()
    for p in episodes:
        meta = json.loads((p / "meta.json").read_text())
        per_task[meta["task"]] = per_task.get(meta["task"], 0) + 1
        frames += int(meta["frame_count"])
        points.add(int(meta["points_per_cloud"]))
    return {
        "episodes": len(episodes),
        "frames": frames,
        "per_task": dict(sorted(per_task.items())),
        "points_per_cloud": sorted(points),
    }


def extract_action_chunks(episode: DemonstrationEpisode, horizon: int) -> np.ndarray:
    """Reference action extraction: chunk at frame t = proprio of frames
    t+1 .. t+horizon (pose 7 + gripper), short chunks padded by repeating the
    final frame. Shape (frames, horizon, 8) float32."""
    if horizon < 1:
        raise InvalidArgumentError("horizon must be >= 1")
    prop = np.stack([np.concatenate([f.ee_pose, [np.float32(f.gripper)]])
                     for f in episode.frames]).astype(np.float32)
    n = len(prop)
    out = np.empty((n, horizon, 8), dtype=np.float32)
    for t in range(n):
        idx = np.minimum(np.arange(t + 1, t + 1 + horizon), n - 1)
        out[t] = prop[idx]
    return out
