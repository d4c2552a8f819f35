"""Grid conventions shared by every module.

A scalar field is a float64 array of shape (height, width); a binary mask
is a uint8 array of the same shape with values in {0, 1}. Arrays are
row-major with the origin at the top-left, so ``a[j, i]`` addresses
column ``i``, row ``j``. The continuous center of pixel ``(i, j)`` is
``(i + 0.5, j + 0.5)``; every continuous evaluation in the package
samples at pixel centers.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError


def as_field(values) -> np.ndarray:
    """Validate and return a scalar field as a float64 (H, W) array.

    Raises ValueError on wrong rank, empty dimensions, or non-finite values.
    """
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"scalar field must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"scalar field dimensions must be >= 1, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("scalar field contains NaN or Inf")
    return a


def as_mask(values) -> np.ndarray:
    """Validate and return a binary mask as a uint8 (H, W) array of {0, 1}."""
    a = np.asarray(values)
    if a.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"mask dimensions must be >= 1, got {a.shape}")
    if a.dtype == bool:
        return a.astype(np.uint8)
    out = a.astype(np.uint8)
    if not np.array_equal(out, a) or not np.all((out == 0) | (out == 1)):
        raise ValueError("mask values must be exactly 0 or 1")
    return out


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def pixel_centers(width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """Continuous (x, y) coordinates of every pixel center, each (H, W)."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    return xs + 0.5, ys + 0.5


def threshold(field: np.ndarray, t: float) -> np.ndarray:
    """Binarize a field: pixel is foreground iff its value is >= t.

    The comparison is inclusive so that a value sitting exactly on the
    threshold (the sigmoid midpoint of a reconstructed level set, which
    falls on the region boundary) binarizes as foreground. This keeps
    threshold(sigmoid_mask(signed_edt(M)), 0.5) an exact round trip: the
    region is the closed set where the signed distance is <= 0.
    """
    field = as_field(field)
    if not np.isfinite(t):
        raise ValueError("threshold value must be finite")
    return (field >= t).astype(np.uint8)
