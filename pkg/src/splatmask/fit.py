"""Fitting procedures: splat-to-mask and joint dual-task optimization.

The splat branch predicts a soft mask by rendering the Gaussian and
passing it through a steep sigmoid centered at 0.5. Sharpening matters:
the raw Gaussian can never match a hard {0, 1} target (its best L2/Dice
fit shrinks the scales by roughly 20 percent), whereas the sharpened
mask is near-binary, so the generating parameters are a stationary point
of the objective and thresholded recovery is accurate.

The level-set branch in the dual-task fit is one free parameter per
pixel, optimized jointly with the splat. With a labeled target both
branches are pulled to the ground truth and to each other through the
consistency term; without one, only the consistency term trains them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedBoundaryError
from .grid import as_mask, threshold
from .levelset import sigmoid, signed_edt
from .losses import (
    LossBreakdown,
    LossWeights,
    dice_loss,
    dice_loss_grad,
    dtc_loss,
    dtc_loss_grads,
    dtc_schedule,
    l2_loss,
    l2_loss_grad,
    lsf_to_soft_mask,
    total_loss,
)
from .optim import AdamState, adam_step
from .splat import EPS_SCALE, GaussianSplat, render, render_backward


def sharpen(field: np.ndarray, steepness: float) -> np.ndarray:
    """Differentiable binarization: sigmoid(steepness * (field - 0.5))."""
    return sigmoid(steepness * (np.asarray(field, dtype=np.float64) - 0.5))


def sharpen_grad(sharpened: np.ndarray, steepness: float) -> np.ndarray:
    """d sharpen / d field, written in terms of the sharpened output."""
    return steepness * sharpened * (1.0 - sharpened)


@dataclass(frozen=True)
class FitOptions:
    """Knobs shared by both fitting procedures.

    tol is an absolute total-loss stop checked before each step (0
    disables it); the fit also counts as converged when the best loss
    has not improved by min_improvement for `patience` epochs, at which
    point the learning rate is halved and the counter restarts.
    """

    epochs: int = 400
    lr: float = 1e-2
    tol: float = 0.0
    patience: int = 25
    min_improvement: float = 1e-4
    lr_decay: float = 0.5

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")


@dataclass
class FitResult:
    """Outcome of one fit: final parameters, per-epoch losses, and flags."""

    splat: GaussianSplat
    lsf: np.ndarray | None
    loss_trace: list[float]
    epochs_run: int
    converged: bool
    final_breakdown: LossBreakdown
    target_dice: float | None = None
    agreement_dice: float | None = None

    def to_dict(self) -> dict:
        d = {
            "splat": self.splat.to_dict(),
            "loss_trace": [float(v) for v in self.loss_trace],
            "epochs_run": self.epochs_run,
            "converged": self.converged,
            "final_breakdown": self.final_breakdown.to_dict(),
        }
        if self.target_dice is not None:
            d["target_dice"] = float(self.target_dice)
        if self.agreement_dice is not None:
            d["agreement_dice"] = float(self.agreement_dice)
        return d


def _binary_dice(a: np.ndarray, b: np.ndarray) -> float:
    inter = float(np.sum((a == 1) & (b == 1)))
    sizes = float(np.sum(a == 1) + np.sum(b == 1))
    return 1.0 if sizes == 0 else 2.0 * inter / sizes


class _Plateau:
    """Tracks best loss, halves lr on stagnation, reports convergence."""

    def __init__(self, opts: FitOptions, state: AdamState):
        self.opts = opts
        self.state = state
        self.best = np.inf
        self.stale = 0

    def update(self, loss: float) -> None:
        if loss < self.best - self.opts.min_improvement:
            self.best = loss
            self.stale = 0
        else:
            self.stale += 1
            if self.stale >= self.opts.patience:
                self.state.lr *= self.opts.lr_decay
                self.stale = 0

    @property
    def plateaued(self) -> bool:
        return self.stale >= self.opts.patience


def _check_target(target: np.ndarray) -> np.ndarray:
    target = as_mask(target)
    total = int(target.sum())
    if total == 0 or total == target.size:
        raise UndefinedBoundaryError("target mask must contain both classes")
    return target


def fit_splat(
    target: np.ndarray,
    init: GaussianSplat,
    weights: LossWeights = LossWeights(),
    options: FitOptions = FitOptions(),
) -> FitResult:
    """Fit the five splat parameters so the sharpened render matches a mask.

    Minimizes lambda_dice * dice + lambda_m * L2 between the sharpened
    soft mask and the target; scales are projected back above the floor
    after every step.
    """
    target = _check_target(target)
    height, width = target.shape
    tgt = target.astype(np.float64)
    params = init.as_vector()
    state = AdamState(n_params=5, lr=options.lr)
    plateau = _Plateau(options, state)
    trace: list[float] = []
    converged = False
    breakdown = None

    for _ in range(options.epochs):
        splat = GaussianSplat.from_vector(params)
        soft = sharpen(render(splat, width, height), weights.mask_sharpness)
        dice = dice_loss(soft, tgt)
        mask_l2 = l2_loss(soft, tgt)
        breakdown = total_loss(0.0, mask_l2, 0.0, 0.0, dice, weights, lambda_dtc=0.0)
        trace.append(breakdown.total)
        if options.tol > 0.0 and breakdown.total <= options.tol:
            converged = True
            break

        up_soft = weights.lambda_dice * dice_loss_grad(soft, tgt)
        up_soft += weights.lambda_m * l2_loss_grad(soft, tgt)
        up_render = up_soft * sharpen_grad(soft, weights.mask_sharpness)
        grads = render_backward(splat, up_render).as_vector()
        params = adam_step(state, params, grads)
        params[2] = max(params[2], EPS_SCALE)
        params[3] = max(params[3], EPS_SCALE)
        plateau.update(breakdown.total)

    final = GaussianSplat.from_vector(params)
    pred_mask = threshold(render(final, width, height), 0.5)
    return FitResult(
        splat=final,
        lsf=None,
        loss_trace=trace,
        epochs_run=len(trace),
        converged=converged or plateau.plateaued,
        final_breakdown=breakdown,
        target_dice=_binary_dice(pred_mask, target),
    )


def fit_dual_task(
    target: np.ndarray | None,
    init_splat: GaussianSplat,
    init_lsf: np.ndarray,
    weights: LossWeights = LossWeights(),
    options: FitOptions = FitOptions(),
    schedule=dtc_schedule,
) -> FitResult:
    """Jointly optimize the splat branch and a free level-set grid.

    With a target, the splat branch is fit to it (L2 + dice), the grid to
    its signed distance transform (L2), and the two branches to each
    other through the consistency term, whose weight ramps from 0 to
    weights.lambda_dtc under `schedule`. Without a target only the
    consistency term is active, so information flows between the
    branches and nothing else constrains them.
    """
    init_lsf = np.asarray(init_lsf, dtype=np.float64)
    if init_lsf.ndim != 2:
        raise ValueError(f"level-set grid must be 2-D, got shape {init_lsf.shape}")
    height, width = init_lsf.shape
    if target is not None:
        target = _check_target(target)
        if target.shape != init_lsf.shape:
            raise ValueError(
                f"target shape {target.shape} != level-set shape {init_lsf.shape}"
            )
        tgt = target.astype(np.float64)
        lsf_gt = signed_edt(target)

    n = height * width
    params = np.concatenate([init_splat.as_vector(), init_lsf.ravel()])
    state = AdamState(n_params=5 + n, lr=options.lr)
    plateau = _Plateau(options, state)
    trace: list[float] = []
    converged = False
    breakdown = None

    for epoch in range(options.epochs):
        lam_dtc = schedule(epoch, options.epochs, weights.lambda_dtc)
        splat = GaussianSplat.from_vector(params[:5])
        lsf = params[5:].reshape(height, width)
        soft = sharpen(render(splat, width, height), weights.mask_sharpness)

        dtc = dtc_loss(lsf, soft, weights)
        d_lsf_dtc, d_soft_dtc = dtc_loss_grads(lsf, soft, weights)
        if target is not None:
            dice = dice_loss(soft, tgt)
            mask_l2 = l2_loss(soft, tgt)
            lsf_l2 = l2_loss(lsf, lsf_gt)
            up_soft = weights.lambda_dice * dice_loss_grad(soft, tgt)
            up_soft += weights.lambda_m * l2_loss_grad(soft, tgt)
            up_soft += lam_dtc * d_soft_dtc
            d_lsf = weights.lambda_l * l2_loss_grad(lsf, lsf_gt) + lam_dtc * d_lsf_dtc
        else:
            dice = mask_l2 = lsf_l2 = 0.0
            up_soft = lam_dtc * d_soft_dtc
            d_lsf = lam_dtc * d_lsf_dtc

        breakdown = total_loss(0.0, mask_l2, lsf_l2, dtc, dice, weights, lambda_dtc=lam_dtc)
        trace.append(breakdown.total)
        if options.tol > 0.0 and breakdown.total <= options.tol:
            converged = True
            break

        up_render = up_soft * sharpen_grad(soft, weights.mask_sharpness)
        grads = np.concatenate(
            [render_backward(splat, up_render).as_vector(), d_lsf.ravel()]
        )
        params = adam_step(state, params, grads)
        params[2] = max(params[2], EPS_SCALE)
        params[3] = max(params[3], EPS_SCALE)
        plateau.update(breakdown.total)

    final_splat = GaussianSplat.from_vector(params[:5])
    final_lsf = params[5:].reshape(height, width)
    mask_branch = threshold(render(final_splat, width, height), 0.5)
    recon = lsf_to_soft_mask(final_lsf, weights.k_sigmoid, sign=weights.dtc_sign)
    lsf_branch = threshold(recon, 0.5)
    result = FitResult(
        splat=final_splat,
        lsf=final_lsf,
        loss_trace=trace,
        epochs_run=len(trace),
        converged=converged or plateau.plateaued,
        final_breakdown=breakdown,
        agreement_dice=_binary_dice(mask_branch, lsf_branch),
    )
    if target is not None:
        result.target_dice = _binary_dice(mask_branch, target)
    return result
