"""Action-chunk inference by Euler integration of the learned velocity field."""

from __future__ import annotations

import numpy as np
import torch

from . import InferenceError
from .model import FlowPolicy


def infer(policy: FlowPolicy, clouds: np.ndarray, proprio: np.ndarray,
          steps: int | None = None,
          generator: torch.Generator | None = None) -> np.ndarray:
    """Integrate from Gaussian noise to an action chunk (horizon, 8).

    Euler: x <- x + (1/steps) * v(x, t) for t = 0, 1/steps, ...; quaternions
    are renormalized and the gripper clamped to [0, 1] at the end.
    Deterministic given the generator's seed.
    """
    steps = steps if steps is not None else policy.config.denoise_steps
    if steps < 1:
        raise InferenceError("need at least one integration step")
    cfg = policy.config
    clouds_t = torch.as_tensor(np.ascontiguousarray(clouds),
                               dtype=torch.float32)[None]
    proprio_t = torch.as_tensor(np.ascontiguousarray(proprio),
                                dtype=torch.float32).reshape(1, -1)
    with torch.no_grad():
        cond = policy.encode(clouds_t, proprio_t)
        # integration runs in the normalized action space
        x = torch.randn((1, cfg.horizon, 8), generator=generator)
        dt = 1.0 / steps
        for k in range(steps):
            t = torch.full((1,), k * dt)
            x = x + dt * policy.velocity(x, t, cond)
        if not torch.isfinite(x).all():
            raise InferenceError("non-finite velocity integration output")
        x = policy.normalizer.decode(x)
    chunk = x[0].numpy().astype(np.float32)
    quat = chunk[:, 3:7]
    norms = np.linalg.norm(quat, axis=1, keepdims=True)
    norms[norms < 1e-8] = 1.0
    chunk[:, 3:7] = quat / norms
    chunk[:, 7] = np.clip(chunk[:, 7], 0.0, 1.0)
    return chunk
