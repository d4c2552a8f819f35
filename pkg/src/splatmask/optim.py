"""Adam optimizer and a finite-difference gradient check harness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradientError


@dataclass
class AdamState:
    """Bias-corrected Adam with optional L2 weight decay.

    Defaults follow the optimizer's published constants: betas (0.9,
    0.999), eps 1e-8, weight decay 0.
    """

    n_params: int
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError(f"betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        self.m = np.zeros(self.n_params)
        self.v = np.zeros(self.n_params)


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One Adam update. Mutates the state, returns the new parameter vector.

    Non-finite gradients raise NonFiniteGradientError instead of silently
    poisoning the accumulators.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != (state.n_params,) or grads.shape != (state.n_params,):
        raise ValueError(
            f"expected vectors of length {state.n_params}, "
            f"got {params.shape} and {grads.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise NonFiniteGradientError("gradient contains NaN or Inf")
    if state.weight_decay != 0.0:
        grads = grads + state.weight_decay * params
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def gradient_check(f, analytic_grad, point, h: float = 1e-4) -> float:
    """Max relative error between an analytic gradient and central differences.

    f maps a parameter vector to a scalar; analytic_grad is either the
    gradient vector at `point` or a callable returning it. Per coordinate
    the error is |analytic - cd| / max(|analytic|, |cd|, 1e-8).
    """
    point = np.asarray(point, dtype=np.float64)
    grad = np.asarray(
        analytic_grad(point) if callable(analytic_grad) else analytic_grad,
        dtype=np.float64,
    )
    if grad.shape != point.shape:
        raise ValueError(f"gradient shape {grad.shape} != point shape {point.shape}")
    worst = 0.0
    for i in range(point.size):
        shift = np.zeros_like(point)
        shift[i] = h
        hi = float(f(point + shift))
        lo = float(f(point - shift))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteGradientError(f"f non-finite near coordinate {i}")
        cd = (hi - lo) / (2.0 * h)
        err = abs(grad[i] - cd) / max(abs(grad[i]), abs(cd), 1e-8)
        worst = max(worst, err)
    return worst
