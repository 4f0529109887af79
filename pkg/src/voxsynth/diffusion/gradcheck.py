"""Central finite-difference validation of trainable predictor gradients."""

from __future__ import annotations

import numpy as np

from .schedule import NoiseSchedule, forward_diffuse, make_condition_input


def finite_difference_gradcheck(
    predictor,
    probe: tuple[np.ndarray, np.ndarray, int, np.ndarray],
    sched: NoiseSchedule,
    n_params: int = 32,
    h: float = 1e-4,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``probe`` is (x0, y, t, eps). At least ``n_params`` parameters are sampled
    without replacement (all of them if the predictor has fewer). The relative
    error denominator is floored at 1e-6 so parameters with vanishing gradient
    on this probe cannot produce a 0/0; a predictor with no parameters returns
    0 (vacuous check).
    """
    x0, y, t, eps = probe
    x0 = np.asarray(x0, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    xt = forward_diffuse(x0, t, eps, sched)
    z = make_condition_input(xt, y)[None]
    tb = np.array([t])
    target = eps[None]

    theta = predictor.parameters
    if theta.size == 0:
        return 0.0
    _, grad = predictor.mse_loss_and_grad(z, tb, target)

    rng = np.random.Generator(np.random.PCG64(seed))
    k = min(n_params, theta.size)
    idx = rng.choice(theta.size, size=k, replace=False)

    def loss_at(vec):
        predictor.set_parameters(vec)
        loss, _ = predictor.mse_loss_and_grad(z, tb, target)
        return loss

    worst = 0.0
    try:
        for i in idx:
            stepped = theta.copy()
            stepped[i] = theta[i] + h
            lp = loss_at(stepped)
            stepped[i] = theta[i] - h
            lm = loss_at(stepped)
            numeric = (lp - lm) / (2.0 * h)
            denom = max(abs(numeric), abs(grad[i]), 1e-6)
            worst = max(worst, abs(numeric - grad[i]) / denom)
    finally:
        predictor.set_parameters(theta)
    return worst
