"""Sinusoidal timestep embedding.

encode(t) returns [sin(t*f_0), ..., sin(t*f_{h-1}), cos(t*f_0), ..., cos(t*f_{h-1})]
with h = dim/2 geometric frequencies f_i = MAX_PERIOD^(-i/(h-1)) descending
from 1. The layout (all sines, then all cosines) is frozen.
"""

from __future__ import annotations

import numpy as np

from ..errors import DomainError

MAX_PERIOD = 10000.0


class TimeEmbedding:
    def __init__(self, dim: int):
        if dim < 2 or dim % 2 != 0:
            raise DomainError(f"embedding dim must be even and >= 2, got {dim}")
        self.dim = dim
        half = dim // 2
        if half == 1:
            self.freqs = np.array([1.0])
        else:
            self.freqs = np.exp(-np.log(MAX_PERIOD) * np.arange(half) / (half - 1))

    def encode(self, t: int | float) -> np.ndarray:
        ang = float(t) * self.freqs
        return np.concatenate([np.sin(ang), np.cos(ang)])

    def encode_batch(self, t: np.ndarray) -> np.ndarray:
        ang = np.asarray(t, dtype=np.float64)[:, None] * self.freqs[None, :]
        return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)
