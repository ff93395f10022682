"""Client for the stepping wire protocol (newline-delimited JSON).

Speaks to a serving environment over a spawned subprocess's stdio or a TCP
connection. Observation payloads carry base64 float32-LE point clouds.
"""

from __future__ import annotations

import base64
import json
import socket
import subprocess
from dataclasses import dataclass

import numpy as np

from . import ProtocolError


@dataclass
class EnvObs:
    cloud: np.ndarray  # (n, 3) float32
    ee_pose: np.ndarray  # (7,) float64
    gripper: float


def _decode_obs(raw: dict) -> EnvObs:
    for key in ("cloud_b64", "ee_pose", "gripper"):
        if key not in raw:
            raise ProtocolError(f"observation missing {key!r}")
    cloud = np.frombuffer(base64.b64decode(raw["cloud_b64"]), dtype="<f4")
    if cloud.size % 3 != 0:
        raise ProtocolError("cloud payload is not n*3 float32")
    pose = np.asarray(raw["ee_pose"], dtype=np.float64)
    if pose.shape != (7,):
        raise ProtocolError("ee_pose must have 7 entries")
    return EnvObs(cloud.reshape(-1, 3), pose, float(raw["gripper"]))


class EnvClient:
    """One protocol connection; use as a context manager."""

    def __init__(self, command: list[str] | None = None,
                 address: tuple[str, int] | None = None):
        if (command is None) == (address is None):
            raise ValueError("pass exactly one of command/address")
        self._proc = None
        self._sock = None
        if command is not None:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1)
            self._reader = self._proc.stdout
            self._writer = self._proc.stdin
        else:
            self._sock = socket.create_connection(address)
            self._reader = self._sock.makefile("r")
            self._writer = self._sock.makefile("w")

    def _roundtrip(self, msg: dict) -> dict:
        self._writer.write(json.dumps(msg) + "\n")
        self._writer.flush()
        line = self._reader.readline()
        if not line:
            raise ProtocolError("server closed the stream")
        try:
            resp = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed server response: {exc}") from exc
        if "error" in resp:
            raise ProtocolError(f"server error: {resp['error']}")
        return resp

    def reset(self, seed: int) -> EnvObs:
        resp = self._roundtrip({"cmd": "reset", "seed": int(seed)})
        if "obs" not in resp:
            raise ProtocolError("reset response lacks obs")
        return _decode_obs(resp["obs"])

    def step(self, ee_pose: np.ndarray, gripper: float
             ) -> tuple[EnvObs, bool, bool]:
        resp = self._roundtrip({
            "cmd": "step",
            "ee_pose": [float(x) for x in np.asarray(ee_pose).reshape(7)],
            "gripper": float(gripper),
        })
        for key in ("obs", "done", "success"):
            if key not in resp:
                raise ProtocolError(f"step response lacks {key!r}")
        return _decode_obs(resp["obs"]), bool(resp["done"]), bool(resp["success"])

    def close(self) -> None:
        try:
            self._writer.write(json.dumps({"cmd": "close"}) + "\n")
            self._writer.flush()
            self._reader.readline()
        except (BrokenPipeError, ValueError, OSError):
            pass
        if self._proc is not None:
            self._proc.terminate()
            self._proc.wait(timeout=10)
        if self._sock is not None:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
