"""Reader for the demonstration archive format.

Independent of the generator: parses the self-describing layout directly.
frames.bin: magic "R2GEPIS", u32 version=1, u32 frame_count,
u32 points_per_cloud, then per frame cloud f32 n*3, ee_pose f32*7 (pos,
quat wxyz), gripper f32. All little-endian. meta.json sits beside it.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import NoDataError, ShapeError

MAGIC = b"R2GEPIS"
_HEADER = len(MAGIC) + 12


@dataclass(frozen=True)
class Episode:
    clouds: np.ndarray  # (T, n, 3) float32
    proprio: np.ndarray  # (T, 8) float32: pos3, quat4 wxyz, gripper
    meta: dict

    def __len__(self) -> int:
        return len(self.proprio)

    @property
    def cloud_size(self) -> int:
        return self.clouds.shape[1]


def read_episode(path: str | Path) -> Episode:
    path = Path(path)
    raw = (path / "frames.bin").read_bytes()
    if len(raw) < _HEADER or raw[: len(MAGIC)] != MAGIC:
        raise ShapeError(f"{path}: not a frames.bin archive")
    version, frame_count, n_pts = struct.unpack("<III", raw[len(MAGIC):_HEADER])
    if version != 1:
        raise ShapeError(f"{path}: unsupported archive version {version}")
    frame_bytes = 4 * (n_pts * 3 + 8)
    if len(raw) != _HEADER + frame_count * frame_bytes:
        raise ShapeError(f"{path}: truncated frames.bin")
    body = np.frombuffer(raw, dtype="<f4", offset=_HEADER)
    body = body.reshape(frame_count, n_pts * 3 + 8)
    clouds = body[:, : n_pts * 3].reshape(frame_count, n_pts, 3)
    proprio = body[:, n_pts * 3:]
    meta = json.loads((path / "meta.json").read_text())
    return Episode(np.ascontiguousarray(clouds),
                   np.ascontiguousarray(proprio), meta)


def load_dataset(root: str | Path) -> list[Episode]:
    root = Path(root)
    episodes = [read_episode(p) for p in sorted(root.iterdir())
                if p.is_dir() and (p / "frames.bin").exists()]
    if not episodes:
        raise NoDataError(f"no episodes under {root}")
    return episodes


def action_chunks(episode: Episode, horizon: int) -> np.ndarray:
    """Chunk at frame t = proprio of frames t+1 .. t+horizon, padded by
    repeating the final frame. Shape (T, horizon, 8)."""
    prop = episode.proprio
    n = len(prop)
    idx = np.minimum(np.arange(1, horizon + 1)[None, :] + np.arange(n)[:, None],
                     n - 1)
    return prop[idx]


def observation_at(episode: Episode, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Last two clouds and proprio states at frame t (t=0 duplicates itself)."""
    prev = max(t - 1, 0)
    clouds = np.stack([episode.clouds[prev], episode.clouds[t]])
    proprio = np.concatenate([episode.proprio[prev], episode.proprio[t]])
    return clouds, proprio
