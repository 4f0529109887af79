"""Ancestral reverse diffusion conditioned on a fixed prior slice.

Starting from x_T ~ N(0, I), each step computes

    x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) * eps_hat) / sqrt(1 - beta_t)
              + sigma_t * z,   sigma_t = sqrt(beta_t),  z = 0 at t = 1,

with the condition channel y held fixed and noise-free throughout. Only the
final x_0 is clamped to [-1, 1].
"""

from __future__ import annotations

import numpy as np

from ..errors import DivergenceError
from .schedule import NoiseSchedule, make_condition_input


def sample(
    predictor,
    y: np.ndarray,
    sched: NoiseSchedule,
    rng_seed: int,
    noise_scale: float = 1.0,
) -> np.ndarray:
    """Generate a slice conditioned on prior ``y`` (already in [-1, 1]).

    ``noise_scale`` rescales the injected per-step noise; 0 gives the
    deterministic mean trajectory (used by the oracle reconstruction check).
    """
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    x = rng.standard_normal(y.shape)
    for t in range(sched.T, 0, -1):
        beta = sched.beta_at(t)
        ab = sched.alpha_bar_at(t)
        eps_hat = predictor.predict(make_condition_input(x, y), t)
        x = (x - beta / np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(1.0 - beta)
        if t > 1:
            x = x + noise_scale * np.sqrt(beta) * rng.standard_normal(y.shape)
        if not np.all(np.isfinite(x)):
            raise DivergenceError("non-finite state during reverse diffusion", t)
    return np.clip(x, -1.0, 1.0)
