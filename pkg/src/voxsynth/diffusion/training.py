"""Training loop: Adam on the simplified noise-prediction objective.

Every stochastic choice (shuffle order, timestep draw, noise draw) comes from
one PCG64 generator seeded by the config, so runs are exactly repeatable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, DomainError
from .schedule import NoiseSchedule, forward_diffuse_batch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 4
    learning_rate: float = 2e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    seed: int = 0


def desk_defaults(epochs: int = 60, seed: int = 0) -> TrainConfig:
    """Laptop-scale defaults: batch 4 and the reference rate scaled up 10x,
    compensating for schedules hundreds of times shorter than full runs."""
    return TrainConfig(epochs=epochs, batch_size=4, learning_rate=2e-3, seed=seed)


def full_scale_defaults(seed: int = 0) -> TrainConfig:
    """Constants used for full-size runs (documented preset, not desk-feasible)."""
    return TrainConfig(epochs=300, batch_size=8, learning_rate=2e-4, seed=seed)


class Adam:
    def __init__(self, n: int, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad**2
        mhat = self.m / (1.0 - self.beta1**self.t)
        vhat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class TrainResult:
    epoch_losses: list[float]
    step_losses: list[float]
    n_steps: int
    config: TrainConfig
    parameters: np.ndarray = field(repr=False, default=None)


def train(predictor, dataset, cfg: TrainConfig, sched: NoiseSchedule) -> TrainResult:
    """Optimize ``predictor`` on (x0, y) slice pairs, both already in [-1, 1].

    Per step: draw a batch, per sample a uniform timestep in [1, T] and a
    standard-normal noise slice, corrupt, predict, take one Adam step on the
    mean squared noise-prediction error. The batch loss is reduced in a
    fixed order (one flat mean over batch-stacked arrays), so results do not
    depend on how work might be distributed.
    """
    if not dataset:
        raise DomainError("dataset must be non-empty")
    x0s = np.stack([np.asarray(p[0], dtype=np.float64) for p in dataset])
    ys = np.stack([np.asarray(p[1], dtype=np.float64) for p in dataset])
    n = len(dataset)

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    params = predictor.parameters
    opt = Adam(params.size, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2)

    epoch_losses: list[float] = []
    step_losses: list[float] = []
    step = 0
    for _epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x0s[idx], ys[idx]
            tb = rng.integers(1, sched.T + 1, size=len(idx))
            eb = rng.standard_normal(xb.shape)
            xt = forward_diffuse_batch(xb, tb, eb, sched)
            zb = np.stack([xt, yb], axis=1)
            loss, grad = predictor.mse_loss_and_grad(zb, tb, eb)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss {loss}", step)
            params = opt.step(params, grad)
            predictor.set_parameters(params)
            losses.append(loss)
            step_losses.append(loss)
            step += 1
        epoch_losses.append(float(np.mean(losses)))
    return TrainResult(epoch_losses, step_losses, step, cfg, params)


def loss_curve_csv(result: TrainResult, path) -> None:
    with open(path, "w") as f:
        f.write("epoch,mean_loss\n")
        for i, v in enumerate(result.epoch_losses):
            f.write(f"{i},{v!r}\n")
