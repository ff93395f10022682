"""Conditional flow matching on a rectified linear path.

x_t = (1 - t) * noise + t * chunk, target velocity v* = chunk - noise; the
model regresses v* conditioned on the observation. This is the one place the
probability path is defined.
"""

from __future__ import annotations

import torch


def rectified_point(chunk: torch.Tensor, noise: torch.Tensor,
                    t: torch.Tensor) -> torch.Tensor:
    tt = t.view(-1, *([1] * (chunk.dim() - 1)))
    return (1.0 - tt) * noise + tt * chunk


def target_velocity(chunk: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
    return chunk - noise


def cfm_loss(model, clouds: torch.Tensor, proprio: torch.Tensor,
             chunk: torch.Tensor, t: torch.Tensor,
             noise: torch.Tensor) -> torch.Tensor:
    """Mean squared error between the predicted and target velocity.

    `t` may be a scalar tensor or one value per batch element.
    """
    if t.dim() == 0:
        t = t.expand(chunk.shape[0])
    cond = model.encode(clouds, proprio)
    x_t = rectified_point(chunk, noise, t)
    pred = model.velocity(x_t, t, cond)
    return ((pred - target_velocity(chunk, noise)) ** 2).mean()
