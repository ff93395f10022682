"""Deterministic view-direction sampling."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidArgumentError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def fibonacci_hemisphere(n: int) -> np.ndarray:
    """n unit vectors on the upper hemisphere along a golden-angle spiral.

    Heights are z_i = (i + 0.5) / n, azimuths i * pi * (3 - sqrt(5)), so the
    set is deterministic and keeps z strictly inside (0, 1).
    """
    if n < 1:
        raise InvalidArgumentError(f"need at least one sample, got {n}")
    i = np.arange(n, dtype=np.float64)
    z = (i + 0.5) / n
    r = np.sqrt(1.0 - z * z)
    az = i * GOLDEN_ANGLE
    return np.stack([r * np.cos(az), r * np.sin(az), z], axis=1)
