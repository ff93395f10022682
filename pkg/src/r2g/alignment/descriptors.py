"""Keypoint descriptor sets produced by an external feature extractor."""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError


@dataclass(frozen=True)
class DescriptorSet:
    keypoints: np.ndarray  # (n, 2) pixel coordinates (u, v)
    descriptors: np.ndarray  # (n, dim) float32

    def __post_init__(self):
        kp = np.array(self.keypoints, dtype=np.float64).reshape(-1, 2)
        desc = np.array(self.descriptors, dtype=np.float32).reshape(len(kp), -1)
        if len(kp) != len(desc):
            raise InvalidArgumentError("keypoint count != descriptor row count")
        norms = np.linalg.norm(desc.astype(np.float64), axis=1)
        if len(desc) and norms.min() <= 0:
            raise InvalidArgumentError("descriptor rows must have positive norm")
        kp.setflags(write=False)
        desc.setflags(write=False)
        object.__setattr__(self, "keypoints", kp)
        object.__setattr__(self, "descriptors", desc)

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]

    def __len__(self) -> int:
        return len(self.keypoints)

    def unit_rows(self) -> np.ndarray:
        d = self.descriptors.astype(np.float64)
        return d / np.linalg.norm(d, axis=1, keepdims=True)


def save_descriptors(ds: DescriptorSet, path: str | Path) -> None:
    payload = {
        "dim": ds.dim,
        "keypoints": [[float(u), float(v)] for u, v in ds.keypoints],
        "descriptors_b64": base64.b64encode(
            ds.descriptors.astype("<f4").tobytes()).decode("ascii"),
    }
    Path(path).write_text(json.dumps(payload))


def load_descriptors(path: str | Path) -> DescriptorSet:
    raw = json.loads(Path(path).read_text())
    for key in ("dim", "keypoints", "descriptors_b64"):
        if key not in raw:
            raise InvalidArgumentError(f"{path}: descriptor file missing {key!r}")
    data = np.frombuffer(base64.b64decode(raw["descriptors_b64"]), dtype="<f4")
    n = len(raw["keypoints"])
    if data.size != n * raw["dim"]:
        raise InvalidArgumentError(f"{path}: descriptor payload size mismatch")
    return DescriptorSet(np.array(raw["keypoints"]), data.reshape(n, raw["dim"]))
