"""Training loop: AdamW, warmup+cosine schedule, EMA weights, SE(3) augmentation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .archive import action_chunks, load_dataset
from .cfm import cfm_loss
from .model import (ActionNormalizer, FlowPolicy, PolicyConfig,
                    save_checkpoint)
from .schedule import lr_at

logger = logging.getLogger(__name__)

AUG_TRANSLATION = (0.10, 0.10, 0.02)  # sampling box half-extents, meters


def quat_mul_torch(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    aw, ax, ay, az = a.unbind(-1)
    bw, bx, by, bz = b.unbind(-1)
    return torch.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], dim=-1)


def yaw_rotation(theta: torch.Tensor) -> torch.Tensor:
    c, s = torch.cos(theta), torch.sin(theta)
    zero = torch.zeros_like(theta)
    one = torch.ones_like(theta)
    return torch.stack([
        torch.stack([c, -s, zero], dim=-1),
        torch.stack([s, c, zero], dim=-1),
        torch.stack([zero, zero, one], dim=-1),
    ], dim=-2)


def apply_rigid(clouds: torch.Tensor, proprio: torch.Tensor,
                chunk: torch.Tensor, theta: torch.Tensor,
                trans: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """One rigid transform per sample applied jointly to clouds, proprio
    states, and action targets (positions rotated+shifted, quaternions
    pre-multiplied, gripper untouched)."""
    rot = yaw_rotation(theta)  # (B, 3, 3)
    q_rot = torch.stack([torch.cos(theta / 2),
                         torch.zeros_like(theta), torch.zeros_like(theta),
                         torch.sin(theta / 2)], dim=-1)
    clouds = torch.einsum("bij,bcnj->bcni", rot, clouds) + trans[:, None, None, :]

    def move_state(state: torch.Tensor, q: torch.Tensor) -> torch.Tensor:
        pos = torch.einsum("bij,b...j->b...i", rot, state[..., :3]) + (
            trans[:, None, :] if state.dim() == 3 else trans)
        quat = quat_mul_torch(q if state.dim() == 2 else q[:, None, :].expand(
            *state.shape[:-1], 4), state[..., 3:7])
        return torch.cat([pos, quat, state[..., 7:8]], dim=-1)

    prop = torch.cat([move_state(proprio[:, :8], q_rot),
                      move_state(proprio[:, 8:], q_rot)], dim=-1)
    chunk = move_state(chunk, q_rot)
    return clouds, prop, chunk


@dataclass
class TrainResult:
    losses: list[float] = field(default_factory=list)
    checkpoint_path: Path | None = None
    lr_trace: list[float] = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.losses[0]

    @property
    def final_loss(self) -> float:
        return float(np.mean(self.losses[-20:]))


class _Samples:
    """Flat (episode, frame) index over the dataset with prebuilt chunks."""

    def __init__(self, episodes, horizon: int):
        self.clouds = [torch.from_numpy(e.clouds) for e in episodes]
        self.proprio = [torch.from_numpy(e.proprio) for e in episodes]
        self.chunks = [torch.from_numpy(np.ascontiguousarray(
            action_chunks(e, horizon))) for e in episodes]
        self.index = [(i, t) for i, e in enumerate(episodes)
                      for t in range(len(e))]

    def batch(self, picks: torch.Tensor):
        clouds, proprio, chunks = [], [], []
        for flat in picks.tolist():
            ep, t = self.index[flat]
            prev = max(t - 1, 0)
            clouds.append(torch.stack([self.clouds[ep][prev],
                                       self.clouds[ep][t]]))
            proprio.append(torch.cat([self.proprio[ep][prev],
                                      self.proprio[ep][t]]))
            chunks.append(self.chunks[ep][t])
        return (torch.stack(clouds), torch.stack(proprio), torch.stack(chunks))


def ema_update(ema: dict, model: FlowPolicy, decay: float) -> None:
    with torch.no_grad():
        for name, param in model.state_dict().items():
            ema[name].mul_(decay).add_(param, alpha=1.0 - decay)


def train(dataset_root: str | Path, config: PolicyConfig,
          out_path: str | Path | None = None, seed: int = 0,
          steps: int | None = None, log_every: int = 100) -> TrainResult:
    """Train a policy on an episode archive; returns the loss trace and
    writes a self-describing checkpoint (model + EMA weights)."""
    episodes = load_dataset(dataset_root)
    cloud_size = episodes[0].cloud_size
    if cloud_size != config.cloud_size:
        config = PolicyConfig(**{**config.__dict__, "cloud_size": cloud_size})
        logger.info("adopting dataset cloud size %d", cloud_size)
    samples = _Samples(episodes, config.horizon)
    total = steps if steps is not None else config.total_steps
    normalizer = ActionNormalizer.fit(
        np.concatenate([action_chunks(e, config.horizon).reshape(-1, 8)
                        for e in episodes]))

    torch.manual_seed(seed)
    policy = FlowPolicy(config, normalizer)
    policy.train()
    optimizer = torch.optim.AdamW(policy.parameters(), lr=config.lr,
                                  weight_decay=config.weight_decay)
    ema = {k: v.detach().clone() for k, v in policy.state_dict().items()}

    g_data = torch.Generator().manual_seed(seed * 3 + 1)
    g_noise = torch.Generator().manual_seed(seed * 3 + 2)
    g_aug = torch.Generator().manual_seed(seed * 3 + 3)

    result = TrainResult()
    for step in range(total):
        lr = lr_at(step, config.lr, config.warmup_steps, total)
        for group in optimizer.param_groups:
            group["lr"] = lr
        picks = torch.randint(len(samples.index), (config.batch_size,),
                              generator=g_data)
        clouds, proprio, chunk = samples.batch(picks)
        if config.augment == "se3":
            theta = torch.rand(config.batch_size, generator=g_aug) * 2 * torch.pi
            trans = (torch.rand(config.batch_size, 3, generator=g_aug) * 2 - 1
                     ) * torch.tensor(AUG_TRANSLATION)
            clouds, proprio, chunk = apply_rigid(clouds, proprio, chunk,
                                                 theta, trans)
        elif config.augment == "identity":
            zero = torch.zeros(config.batch_size)
            clouds, proprio, chunk = apply_rigid(clouds, proprio, chunk,
                                                 zero, torch.zeros(
                                                     config.batch_size, 3))
        chunk = normalizer.encode(chunk).float()
        # density proportional to (1-t)^2: cancels the 1/(1-t)^2 loss weight
        # of the target-sample field so every flow time trains evenly
        u = torch.rand(config.batch_size, generator=g_noise)
        t = 1.0 - (1.0 - u) ** (1.0 / 3.0)
        noise = torch.randn(chunk.shape, generator=g_noise)
        loss = cfm_loss(policy, clouds, proprio, chunk, t, noise)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        ema_update(ema, policy, config.ema_decay)
        result.losses.append(float(loss.detach()))
        result.lr_trace.append(lr)
        if log_every and step % log_every == 0:
            logger.info("step %d lr %.3g loss %.5f", step, lr, result.losses[-1])

    if out_path is not None:
        save_checkpoint(out_path, policy, ema, total)
        result.checkpoint_path = Path(out_path)
    return result
