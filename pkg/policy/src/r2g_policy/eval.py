"""Closed-loop policy evaluation over the stepping protocol.

Receding horizon: infer a chunk of H actions, execute the first execute_k,
re-observe, repeat. Reports match the generator-side expert CSV schema so
the two can be diffed directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from . import ProtocolError
from .client import EnvClient, EnvObs
from .infer import infer
from .model import FlowPolicy


def episode_seed(seed: int, index: int) -> int:
    """Same derivation as the generator's harness so scene streams align."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


@dataclass
class EvalReport:
    per_seed: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def rates(self) -> list[float]:
        return [s / n for _, n, s in self.per_seed]

    @property
    def mean(self) -> float:
        return float(np.mean(self.rates))

    @property
    def std(self) -> float:
        return float(np.std(self.rates))

    def to_csv(self) -> str:
        lines = ["seed,episodes,successes,success_rate"]
        for seed, n, s in self.per_seed:
            lines.append(f"{seed},{n},{s},{s / n:.6f}")
        lines.append(f"mean,,,{self.mean:.6f}")
        lines.append(f"std,,,{self.std:.6f}")
        return "\n".join(lines) + "\n"


class ObservationWindow:
    """Keeps the last two protocol observations (first frame duplicates)."""

    def __init__(self, obs: EnvObs):
        self.prev = obs
        self.curr = obs

    def push(self, obs: EnvObs) -> None:
        self.prev = self.curr
        self.curr = obs

    def clouds(self) -> np.ndarray:
        return np.stack([self.prev.cloud, self.curr.cloud])

    def proprio(self) -> np.ndarray:
        def state(o: EnvObs) -> np.ndarray:
            return np.concatenate([o.ee_pose, [o.gripper]]).astype(np.float32)

        return np.concatenate([state(self.prev), state(self.curr)])


def run_episode(client: EnvClient, policy: FlowPolicy, seed: int,
                max_decisions: int = 40, steps: int | None = None,
                execute_k: int | None = None,
                generator: torch.Generator | None = None) -> bool:
    execute_k = execute_k or policy.config.execute_k
    window = ObservationWindow(client.reset(seed))
    for _ in range(max_decisions):
        chunk = infer(policy, window.clouds(), window.proprio(), steps,
                      generator)
        for action in chunk[:execute_k]:
            obs, done, success = client.step(action[:7], float(action[7]))
            window.push(obs)
            if done:
                return success
    return False


def closed_loop_eval(client_factory, policy: FlowPolicy, seeds: list[int],
                     episodes_per_seed: int, execute_k: int | None = None,
                     steps: int | None = None, infer_seed: int = 0
                     ) -> EvalReport:
    """client_factory() must yield a fresh EnvClient (context manager)."""
    report = EvalReport()
    for seed in seeds:
        successes = 0
        with client_factory() as client:
            for i in range(episodes_per_seed):
                gen = torch.Generator().manual_seed(
                    infer_seed * 1_000_003 + episode_seed(seed, i) % 2**31)
                try:
                    ok = run_episode(client, policy, episode_seed(seed, i),
                                     steps=steps, execute_k=execute_k,
                                     generator=gen)
                except ProtocolError as exc:
                    raise ProtocolError(str(exc), episode=i) from exc
                successes += int(ok)
        report.per_seed.append((seed, episodes_per_seed, successes))
    return report
