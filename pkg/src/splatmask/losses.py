"""Loss terms for mask fitting and their weighted combination.

All field losses reduce by mean over pixels, so the lambda weights mean
the same thing at every resolution. Each loss ships with its gradient
with respect to the predicted field; the fitters assemble these into a
single upstream field and pull it back through the splat renderer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ShapeMismatchError
from .grid import as_field, as_mask, check_same_shape
from .levelset import lsf_to_soft_mask

PROB_EPS = 1e-7  # probability clamp before logs; focal is undefined at 0 and 1
DICE_SMOOTH = 1e-6


@dataclass(frozen=True)
class LossWeights:
    """Weights and shape constants for the combined objective.

    lambda_dtc is the ceiling of the consistency ramp (see dtc_schedule);
    dtc_sign -1 orients reconstructed soft masks foreground-positive,
    +1 keeps the literal sigmoid(k * L) orientation. mask_sharpness is
    the steepness of the sigmoid that binarizes a rendered splat before
    it is compared with a hard target.
    """

    lambda_m: float = 0.25
    lambda_l: float = 0.5
    lambda_dice: float = 0.5
    lambda_dtc: float = 0.1
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25
    k_sigmoid: float = 1500.0
    dtc_sign: float = -1.0
    mask_sharpness: float = 50.0

    def __post_init__(self):
        for name in ("lambda_m", "lambda_l", "lambda_dice", "lambda_dtc", "focal_gamma"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 < self.focal_alpha < 1.0:
            raise ValueError(f"focal_alpha must be in (0, 1), got {self.focal_alpha}")
        if not self.k_sigmoid > 0:
            raise ValueError(f"k_sigmoid must be > 0, got {self.k_sigmoid}")
        if self.dtc_sign not in (-1.0, 1.0):
            raise ValueError(f"dtc_sign must be +1 or -1, got {self.dtc_sign}")
        if not self.mask_sharpness > 0:
            raise ValueError(f"mask_sharpness must be > 0, got {self.mask_sharpness}")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "LossWeights":
        """Build from a flat dict; unknown keys rejected, missing keys default."""
        known = {f.name for f in fields(cls)}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown loss weight fields: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in mapping.items()})

    @classmethod
    def from_file(cls, path) -> "LossWeights":
        """Load from a flat JSON or TOML file (by extension)."""
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            return cls.from_mapping(tomllib.loads(text.decode()))
        return cls.from_mapping(json.loads(text.decode()))

    def to_dict(self) -> dict:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term values and their weighted total."""

    class_loss: float
    mask_loss: float
    lsf_loss: float
    dtc_loss: float
    dice_loss: float
    total: float

    def to_dict(self) -> dict:
        return {
            "class_loss": self.class_loss,
            "mask_loss": self.mask_loss,
            "lsf_loss": self.lsf_loss,
            "dtc_loss": self.dtc_loss,
            "dice_loss": self.dice_loss,
            "total": self.total,
        }


def focal_loss(p, y, gamma: float = 2.0, alpha: float = 0.25) -> float:
    """Class-imbalance-weighted cross entropy, summed over components.

    -sum_i [ y_i log(p_i) (1-p_i)^gamma alpha
             + (1-y_i) log(1-p_i) p_i^gamma (1-alpha) ]

    With gamma=0 and alpha=0.5 this reduces to half the (summed) binary
    cross entropy. Probabilities are clamped to [1e-7, 1 - 1e-7].
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if p.shape != y.shape:
        raise ShapeMismatchError(f"shape mismatch: {p.shape} vs {y.shape}")
    p = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    pos = y * np.log(p) * (1.0 - p) ** gamma * alpha
    neg = (1.0 - y) * np.log(1.0 - p) * p**gamma * (1.0 - alpha)
    return float(-np.sum(pos + neg))


def dice_loss(x, y) -> float:
    """Soft overlap loss 1 - (2 sum(xy) + eps) / (sum(x) + sum(y) + eps).

    Zero when x equals y exactly; approaches one for disjoint supports.
    """
    x = as_field(x)
    y = np.asarray(y, dtype=np.float64)
    check_same_shape(x, y)
    inter = float(np.sum(x * y))
    sizes = float(np.sum(x) + np.sum(y))
    return 1.0 - (2.0 * inter + DICE_SMOOTH) / (sizes + DICE_SMOOTH)


def dice_loss_grad(x, y) -> np.ndarray:
    """d dice_loss / d x, elementwise."""
    x = as_field(x)
    y = np.asarray(y, dtype=np.float64)
    check_same_shape(x, y)
    num = 2.0 * float(np.sum(x * y)) + DICE_SMOOTH
    den = float(np.sum(x) + np.sum(y)) + DICE_SMOOTH
    return (num - 2.0 * y * den) / (den * den)


def l2_loss(a, b) -> float:
    """Mean squared difference between two fields."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    d = a - b
    return float(np.mean(d * d))


def l2_loss_grad(a, b) -> np.ndarray:
    """d l2_loss / d a, elementwise."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    return 2.0 * (a - b) / a.size


def dtc_loss(lsf, mask_pred, weights: LossWeights) -> float:
    """Dual-task consistency: L2 between the soft mask reconstructed from
    the level set and the predicted mask field."""
    recon = lsf_to_soft_mask(lsf, weights.k_sigmoid, sign=weights.dtc_sign)
    return l2_loss(recon, mask_pred)


def dtc_loss_grads(lsf, mask_pred, weights: LossWeights) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of dtc_loss w.r.t. the level set and the predicted mask."""
    lsf = np.asarray(lsf, dtype=np.float64)
    mask_pred = np.asarray(mask_pred, dtype=np.float64)
    check_same_shape(lsf, mask_pred)
    recon = lsf_to_soft_mask(lsf, weights.k_sigmoid, sign=weights.dtc_sign)
    diff = 2.0 * (recon - mask_pred) / lsf.size
    d_lsf = diff * recon * (1.0 - recon) * weights.dtc_sign * weights.k_sigmoid
    d_mask = -diff
    return d_lsf, d_mask


def total_loss(
    class_loss: float,
    mask_loss: float,
    lsf_loss: float,
    dtc: float,
    dice: float,
    weights: LossWeights,
    lambda_dtc: float | None = None,
) -> LossBreakdown:
    """Weighted combination of the five terms.

    lambda_dtc overrides weights.lambda_dtc so a scheduler can ramp the
    consistency weight per epoch without rebuilding the weights record.
    """
    parts = (class_loss, mask_loss, lsf_loss, dtc, dice)
    if not all(math.isfinite(v) for v in parts):
        raise ValueError(f"loss components must be finite, got {parts}")
    ldtc = weights.lambda_dtc if lambda_dtc is None else lambda_dtc
    total = (
        class_loss
        + weights.lambda_m * mask_loss
        + weights.lambda_l * lsf_loss
        + ldtc * dtc
        + weights.lambda_dice * dice
    )
    return LossBreakdown(class_loss, mask_loss, lsf_loss, dtc, dice, total)


def dtc_schedule(epoch: int, total_epochs: int, lambda_max: float) -> float:
    """Consistency-weight ramp: 0 at epoch 0, then an exponential approach
    lambda_max * exp(-5 (1 - epoch/total)^2), reaching lambda_max exactly
    at the final epoch."""
    if epoch < 0 or total_epochs < 1 or epoch > total_epochs:
        raise ValueError(f"need 0 <= epoch <= total_epochs, got {epoch}/{total_epochs}")
    if epoch == 0:
        return 0.0
    t = epoch / total_epochs
    return lambda_max * math.exp(-5.0 * (1.0 - t) ** 2)


def with_lambda_dtc(weights: LossWeights, value: float) -> LossWeights:
    """Copy of the weights with lambda_dtc replaced (records are frozen)."""
    return replace(weights, lambda_dtc=value)
