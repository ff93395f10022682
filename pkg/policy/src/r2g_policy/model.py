"""Observation encoder and velocity field for conditional flow matching."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from . import ShapeError


@dataclass(frozen=True)
class ActionNormalizer:
    """Per-dimension affine map into a unit-scale action space.

    Without it the MSE is dominated by quaternion components and meter-scale
    position errors barely register against N(0, 1) flow noise.
    """

    mean: np.ndarray  # (8,)
    std: np.ndarray  # (8,)

    @staticmethod
    def fit(chunks: np.ndarray, floor: float = 1e-2) -> "ActionNormalizer":
        flat = chunks.reshape(-1, chunks.shape[-1]).astype(np.float64)
        return ActionNormalizer(flat.mean(axis=0),
                                np.maximum(flat.std(axis=0), floor))

    @staticmethod
    def identity(dim: int = 8) -> "ActionNormalizer":
        return ActionNormalizer(np.zeros(dim), np.ones(dim))

    def encode(self, x):
        if isinstance(x, torch.Tensor):
            mean = torch.as_tensor(self.mean, dtype=x.dtype)
            std = torch.as_tensor(self.std, dtype=x.dtype)
            return (x - mean) / std
        return (x - self.mean) / self.std

    def decode(self, x):
        if isinstance(x, torch.Tensor):
            mean = torch.as_tensor(self.mean, dtype=x.dtype)
            std = torch.as_tensor(self.std, dtype=x.dtype)
            return x * std + mean
        return x * self.std + self.mean


@dataclass(frozen=True)
class PolicyConfig:
    horizon: int = 32
    denoise_steps: int = 20
    real_denoise_steps: int = 30  # deployment-mode integration steps
    lr: float = 3e-5
    weight_decay: float = 1e-6
    warmup_steps: int = 5000
    batch_size: int = 128
    ema_decay: float = 0.999
    cloud_size: int = 4096
    augment: str = "off"  # off | se3 | identity (identity exercises the pipeline)
    point_hidden: tuple[int, int] = (64, 128)
    cond_dim: int = 128
    field_hidden: tuple[int, int] = (256, 256)
    time_dim: int = 32
    total_steps: int = 20000
    execute_k: int = 8  # receding-horizon stride

    def __post_init__(self):
        if min(self.horizon, self.denoise_steps, self.batch_size,
               self.cloud_size, self.total_steps) < 1:
            raise ValueError("policy config values must be positive")
        if self.augment not in ("off", "se3", "identity"):
            raise ValueError(f"unknown augment mode {self.augment!r}")


class PointNetEncoder(nn.Module):
    """Shared per-point MLP followed by a max-pool: permutation invariant."""

    def __init__(self, hidden=(64, 128)):
        super().__init__()
        h1, h2 = hidden
        self.mlp = nn.Sequential(nn.Linear(3, h1), nn.ReLU(),
                                 nn.Linear(h1, h2), nn.ReLU(),
                                 nn.Linear(h2, h2))
        self.out_dim = h2

    def forward(self, clouds: torch.Tensor) -> torch.Tensor:
        # clouds: (..., n_points, 3) -> (..., out_dim)
        return self.mlp(clouds).amax(dim=-2)


class ObsEncoder(nn.Module):
    """Two point clouds plus two proprio states -> conditioning vector."""

    PROPRIO_DIM = 16  # 2 x (pos3 + quat4 + gripper)

    def __init__(self, config: PolicyConfig):
        super().__init__()
        self.cloud_size = config.cloud_size
        self.pointnet = PointNetEncoder(config.point_hidden)
        self.head = nn.Sequential(
            nn.Linear(2 * self.pointnet.out_dim + self.PROPRIO_DIM,
                      config.cond_dim),
            nn.ReLU(), nn.Linear(config.cond_dim, config.cond_dim))

    def forward(self, clouds: torch.Tensor, proprio: torch.Tensor) -> torch.Tensor:
        # clouds: (B, 2, n, 3); proprio: (B, 16)
        if clouds.shape[-3] != 2 or clouds.shape[-1] != 3:
            raise ShapeError(f"expected (B, 2, n, 3) clouds, got {tuple(clouds.shape)}")
        if clouds.shape[-2] != self.cloud_size:
            raise ShapeError(
                f"cloud size {clouds.shape[-2]} != configured {self.cloud_size}")
        feats = self.pointnet(clouds)  # (B, 2, F)
        flat = feats.flatten(-2)
        return self.head(torch.cat([flat, proprio], dim=-1))


def time_features(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding of the flow time in [0, 1]."""
    half = dim // 2
    freqs = torch.exp(torch.linspace(0.0, 6.0, half, dtype=t.dtype,
                                     device=t.device))
    ang = t[..., None] * freqs
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)


class VelocityField(nn.Module):
    """Velocity via target-sample parameterization: the MLP predicts the
    clean chunk x1_hat and the field returns (x1_hat - x) / max(1 - t, floor).

    On the rectified path the exact velocity is (x1 - x_t) / (1 - t), so
    regressing x1 instead of raw velocity removes the steep time dependence
    the net would otherwise have to fit; the floor caps the blow-up at t -> 1.
    """

    TIME_FLOOR = 0.05

    def __init__(self, config: PolicyConfig):
        super().__init__()
        self.horizon = config.horizon
        self.action_dim = 8
        in_dim = (config.horizon * 8 + config.time_dim + config.cond_dim
                  + ObsEncoder.PROPRIO_DIM)
        h1, h2 = config.field_hidden
        self.time_dim = config.time_dim
        self.net = nn.Sequential(nn.Linear(in_dim, h1), nn.ReLU(),
                                 nn.Linear(h1, h2), nn.ReLU(),
                                 nn.Linear(h2, config.horizon * 8))

    def forward(self, x: torch.Tensor, t: torch.Tensor,
                cond: torch.Tensor) -> torch.Tensor:
        # x: (B, H, 8); t: (B,) in [0, 1]; cond: (B, cond_dim + 16)
        # whose trailing 8 entries are the current normalized robot state
        if x.shape[-2] != self.horizon or x.shape[-1] != self.action_dim:
            raise ShapeError(f"expected (B, {self.horizon}, 8) chunk, "
                             f"got {tuple(x.shape)}")
        emb = time_features(t, self.time_dim)
        flat = torch.cat([x.flatten(-2), emb, cond], dim=-1)
        # residual around the current state: the net learns per-row deviations
        base = cond[..., -8:].unsqueeze(-2)
        x1_hat = self.net(flat).view(*x.shape) + base
        denom = torch.clamp(1.0 - t, min=self.TIME_FLOOR)
        return (x1_hat - x) / denom.view(-1, *([1] * (x.dim() - 1)))


class FlowPolicy(nn.Module):
    def __init__(self, config: PolicyConfig,
                 normalizer: ActionNormalizer | None = None):
        super().__init__()
        self.config = config
        self.normalizer = normalizer or ActionNormalizer.identity()
        self.encoder = ObsEncoder(config)
        self.field = VelocityField(config)

    def encode(self, clouds: torch.Tensor, proprio: torch.Tensor) -> torch.Tensor:
        """Conditioning vector: learned cloud+proprio features concatenated
        with the raw normalized proprio (a skip path that keeps the exact
        robot state available to the velocity field)."""
        lead = proprio.shape[:-1]
        prop = self.normalizer.encode(
            proprio.reshape(*lead, 2, 8)).reshape(*lead, 16).to(proprio.dtype)
        return torch.cat([self.encoder(clouds, prop), prop], dim=-1)

    def velocity(self, x: torch.Tensor, t: torch.Tensor,
                 cond: torch.Tensor) -> torch.Tensor:
        return self.field(x, t, cond)


def save_checkpoint(path: str | Path, policy: FlowPolicy, ema_state: dict,
                    step: int) -> None:
    torch.save({
        "config": asdict(policy.config),
        "normalizer": {"mean": policy.normalizer.mean.tolist(),
                       "std": policy.normalizer.std.tolist()},
        "model_state": policy.state_dict(),
        "ema_state": ema_state,
        "step": step,
    }, path)


def load_checkpoint(path: str | Path, use_ema: bool = True
                    ) -> tuple[FlowPolicy, PolicyConfig, int]:
    raw = torch.load(path, map_location="cpu", weights_only=False)
    cfg_dict = dict(raw["config"])
    for key in ("point_hidden", "field_hidden"):
        cfg_dict[key] = tuple(cfg_dict[key])
    config = PolicyConfig(**cfg_dict)
    norm = raw.get("normalizer")
    normalizer = (ActionNormalizer(np.array(norm["mean"]), np.array(norm["std"]))
                  if norm else ActionNormalizer.identity())
    policy = FlowPolicy(config, normalizer)
    policy.load_state_dict(raw["ema_state"] if use_ema and raw.get("ema_state")
                           else raw["model_state"])
    policy.eval()
    return policy, config, int(raw.get("step", 0))
