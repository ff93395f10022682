"""Newline-delimited JSON stepping protocol over stdio or TCP.

Requests:  {"cmd": "reset", "seed": u64}
           {"cmd": "step", "ee_pose": [7 floats], "gripper": float}
           {"cmd": "close"}
Responses: reset -> {"obs": {...}}; step -> {"obs": {...}, "done": b, "success": b};
           close -> {"ok": true}. Errors -> {"error": "message"}.
Obs payload: {"cloud_b64": base64 float32-LE n*3 row-major, "ee_pose": [7],
"gripper": f}.
"""

from __future__ import annotations

import base64
import json
import logging
import socket

from .env import KinematicEnv, Obs

logger = logging.getLogger(__name__)


def encode_obs(obs: Obs) -> dict:
    cloud = obs.cloud
    if cloud is None:
        raise ValueError("protocol serving requires a rendering environment")
    return {
        "cloud_b64": base64.b64encode(cloud.astype("<f4").tobytes()).decode("ascii"),
        "ee_pose": [float(x) for x in obs.ee_pose],
        "gripper": float(obs.gripper),
    }


def handle_request(env: KinematicEnv, raw: str) -> tuple[dict, bool]:
    """Dispatch one JSON line; returns (response, keep_serving)."""
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError as exc:
        return {"error": f"malformed JSON: {exc}"}, True
    cmd = msg.get("cmd")
    try:
        if cmd == "reset":
            if "seed" not in msg:
                return {"error": "reset requires a seed"}, True
            obs = env.reset(int(msg["seed"]))
            return {"obs": encode_obs(obs)}, True
        if cmd == "step":
            if "ee_pose" not in msg or "gripper" not in msg:
                return {"error": "step requires ee_pose and gripper"}, True
            pose = msg["ee_pose"]
            if len(pose) != 7:
                return {"error": "ee_pose must have 7 entries"}, True
            obs, done, success = env.step(pose, float(msg["gripper"]))
            return {"obs": encode_obs(obs), "done": done, "success": success}, True
        if cmd == "close":
            return {"ok": True}, False
    except Exception as exc:  # protocol stays alive across bad requests
        logger.exception("request failed")
        return {"error": f"{type(exc).__name__}: {exc}"}, True
    return {"error": f"unknown cmd {cmd!r}"}, True


def serve_stream(env: KinematicEnv, reader, writer) -> None:
    """Serve until a close command or EOF; reader/writer are text streams."""
    for line in reader:
        line = line.strip()
        if not line:
            continue
        response, keep = handle_request(env, line)
        writer.write(json.dumps(response) + "\n")
        writer.flush()
        if not keep:
            break


def serve_stdio(env: KinematicEnv) -> None:
    import sys

    serve_stream(env, sys.stdin, sys.stdout)


def serve_tcp(env: KinematicEnv, host: str, port: int,
              max_connections: int | None = None, on_bound=None) -> None:
    """Accept sequential connections; each is served until its close command.

    Port 0 binds an ephemeral port; `on_bound(port)` reports the actual one.
    """
    served = 0
    with socket.create_server((host, port)) as server:
        bound = server.getsockname()[1]
        logger.info("serving on %s:%d", host, bound)
        if on_bound is not None:
            on_bound(bound)
        while max_connections is None or served < max_connections:
            conn, addr = server.accept()
            logger.info("connection from %s", addr)
            with conn, conn.makefile("r") as reader, conn.makefile("w") as writer:
                serve_stream(env, reader, writer)
            served += 1
