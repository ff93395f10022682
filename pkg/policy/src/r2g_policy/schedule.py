"""Learning-rate schedule: linear warmup into cosine annealing."""

from __future__ import annotations

import math


def lr_at(step: int, peak: float, warmup_steps: int, total_steps: int) -> float:
    """Closed form: peak * step / warmup during warmup, then cosine from peak
    to zero over the remaining steps."""
    if step < warmup_steps:
        return peak * step / warmup_steps
    if total_steps <= warmup_steps:
        return peak
    frac = (step - warmup_steps) / (total_steps - warmup_steps)
    return peak * 0.5 * (1.0 + math.cos(math.pi * min(frac, 1.0)))
