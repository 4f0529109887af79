"""Noise schedule and the forward diffusion process.

Timesteps are 1-based: t runs over [1, T]. ``alpha_bar[t-1]`` is the product
of (1 - beta_s) for s <= t. The forward process corrupts a clean slice x0 in
[-1, 1] as x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ShapeError

DEFAULT_TIMESTEPS = 500
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    beta: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        self.beta.setflags(write=False)
        self.alpha_bar.setflags(write=False)

    def alpha_bar_at(self, t: int) -> float:
        if not 1 <= t <= self.T:
            raise DomainError(f"timestep {t} outside [1, {self.T}]")
        return float(self.alpha_bar[t - 1])

    def beta_at(self, t: int) -> float:
        if not 1 <= t <= self.T:
            raise DomainError(f"timestep {t} outside [1, {self.T}]")
        return float(self.beta[t - 1])


def build_schedule(
    T: int = DEFAULT_TIMESTEPS,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Linear beta schedule, endpoints included; alpha_bar by cumulative product."""
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise DomainError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alpha_bar = np.cumprod(1.0 - beta)
    return NoiseSchedule(T=T, beta=beta, alpha_bar=alpha_bar)


def forward_diffuse(
    x0: np.ndarray, t: int, eps: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """One-shot corruption of x0 to noise level t with caller-supplied eps."""
    if x0.shape != eps.shape:
        raise ShapeError(f"x0 {x0.shape} vs eps {eps.shape}")
    ab = sched.alpha_bar_at(t)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def forward_diffuse_batch(
    x0: np.ndarray, t: np.ndarray, eps: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """Batched corruption: x0/eps are (B, H, W), t is (B,) of ints in [1, T]."""
    t = np.asarray(t)
    if np.any((t < 1) | (t > sched.T)):
        raise DomainError(f"timesteps outside [1, {sched.T}]")
    ab = sched.alpha_bar[t - 1][:, None, None]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def make_condition_input(x_t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Stack the noisy slice and the prior: channel 0 = x_t, channel 1 = y."""
    if x_t.shape != y.shape:
        raise ShapeError(f"x_t {x_t.shape} vs y {y.shape}")
    return np.stack([x_t, y], axis=0)


def simple_loss(predictor, x0, y, t, eps, sched) -> float:
    """Mean squared error between the injected and the predicted noise."""
    x_t = forward_diffuse(x0, t, eps, sched)
    eps_hat = predictor.predict(make_condition_input(x_t, y), t)
    return float(np.mean((eps - eps_hat) ** 2))
