"""Initial-condition fitting with Adam on a mean-squared loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FitDivergenceError, InputError


@dataclass(frozen=True)
class FitConfig:
    """Adam hyperparameters for the initial-condition fit."""

    iterations: int = 10000
    step_size: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    seed: int = 0
    lr_decay_steps: int = 0       # 0 disables the step decay
    lr_decay_factor: float = 0.5

    def __post_init__(self):
        if self.iterations < 1:
            raise InputError("iteration count must be >= 1")


def fit_initial_condition(model, u0, fit, points, theta0=None):
    """Fit theta so the model matches ``u0`` on the given points.

    Runs Adam (standard first/second-moment recursion with bias correction)
    on the mean squared error over the points. ``u0`` maps (N, d) points to
    target values of shape (N,) or (N, output_dim). The start vector
    defaults to the model's seeded initialization.

    Returns
    -------
    (theta, final_loss)

    Raises
    ------
    FitDivergenceError
        If the loss stops being finite, carrying the iteration index.
    """
    points = np.asarray(points, dtype=float)
    target = np.asarray(u0(points), dtype=float)
    n = points.shape[0]
    target = target.reshape(n, model.output_dim)
    if theta0 is None:
        theta = model.initial_params(fit.seed)
    else:
        theta = np.asarray(theta0, dtype=float).copy()

    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    scale = 2.0 / target.size
    for it in range(1, fit.iterations + 1):
        values, grad = model.value_and_weighted_gradient(
            theta, points, lambda u: scale * (u - target)
        )
        loss = float(np.mean((values - target) ** 2))
        if not np.isfinite(loss):
            raise FitDivergenceError(
                f"fit loss became non-finite at iteration {it}", iteration=it
            )
        m = fit.beta1 * m + (1.0 - fit.beta1) * grad
        v = fit.beta2 * v + (1.0 - fit.beta2) * grad * grad
        m_hat = m / (1.0 - fit.beta1**it)
        v_hat = v / (1.0 - fit.beta2**it)
        lr = fit.step_size
        if fit.lr_decay_steps > 0:
            lr *= fit.lr_decay_factor ** (it // fit.lr_decay_steps)
        theta = theta - lr * m_hat / (np.sqrt(v_hat) + fit.eps_hat)
    final_loss = float(np.mean((model.evaluate(theta, points) - target) ** 2))
    return theta, final_loss
