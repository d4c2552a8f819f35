"""Signed Euclidean distance transform and sigmoid mask reconstruction.

The boundary of a mask is the discrete set of foreground pixels with at
least one 4-neighbor background pixel; pixels outside the grid count as
background, so foreground touching the image edge is boundary. Each
pixel's level-set value is the Euclidean distance from its center to the
nearest boundary-pixel center, negated inside the foreground and zero on
the boundary itself.

signed_edt runs the exact two-pass transform (per-row nearest site, then
a per-column lower envelope of parabolas) entirely on integer squared
distances, so it agrees bitwise with the exhaustive brute_force_edt.
"""

from __future__ import annotations

import numpy as np

from .errors import UndefinedBoundaryError
from .grid import as_mask

_INF = np.int64(1) << 60


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, elementwise."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """Boolean map of foreground pixels with a 4-neighbor background pixel."""
    mask = as_mask(mask)
    fg = mask.astype(bool)
    padded = np.pad(fg, 1, mode="constant", constant_values=False)
    has_bg_neighbor = ~(
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return fg & has_bg_neighbor


def _check_two_classes(mask: np.ndarray) -> np.ndarray:
    mask = as_mask(mask)
    total = int(mask.sum())
    if total == 0 or total == mask.size:
        raise UndefinedBoundaryError(
            "mask must contain both foreground and background pixels"
        )
    return mask


def _row_nearest_site_sq(sites: np.ndarray) -> np.ndarray:
    """Per-row squared distance (along x only) to the nearest site column.

    Rows without sites get _INF. Vectorized two-scan over all rows at once.
    """
    h, w = sites.shape
    big = np.int64(w + 1)
    # distance in columns to the most recent site scanning left-to-right
    d = np.where(sites, np.int64(0), big)
    for x in range(1, w):
        d[:, x] = np.minimum(d[:, x], d[:, x - 1] + 1)
    for x in range(w - 2, -1, -1):
        d[:, x] = np.minimum(d[:, x], d[:, x + 1] + 1)
    sq = d.astype(np.int64) ** 2
    sq[d >= big] = _INF
    return sq


def _column_envelope_sq(f: np.ndarray) -> np.ndarray:
    """1-D lower envelope of parabolas y -> f[i] + (y - i)^2 down each column.

    Standard intersection-ordered hull; output values are exact integers
    because each is f[site] + (y - site)^2 with integer inputs.
    """
    h, w = f.shape
    out = np.empty((h, w), dtype=np.int64)
    ys = np.arange(h, dtype=np.int64)
    for x in range(w):
        col = f[:, x]
        finite = np.nonzero(col < _INF)[0]
        if finite.size == 0:
            out[:, x] = _INF
            continue
        v = np.empty(finite.size, dtype=np.int64)  # site rows of the hull
        z = np.empty(finite.size + 1, dtype=np.float64)  # hull cell borders
        k = 0
        v[0] = finite[0]
        z[0] = -np.inf
        z[1] = np.inf
        for q in finite[1:]:
            fq = col[q] + q * q
            while True:
                p = v[k]
                s = (fq - (col[p] + p * p)) / (2.0 * (q - p))
                if s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = np.inf
        idx = np.searchsorted(z[1 : k + 2], ys, side="left")
        sites = v[idx]
        out[:, x] = col[sites] + (ys - sites) ** 2
    return out


def _squared_edt(sites: np.ndarray) -> np.ndarray:
    """Exact integer squared distance from every pixel to the nearest site."""
    if not sites.any():
        raise UndefinedBoundaryError("no sites to measure distance to")
    return _column_envelope_sq(_row_nearest_site_sq(sites))


def _brute_squared(sites: np.ndarray) -> np.ndarray:
    """O(pixels * sites) reference: minimize over every site explicitly."""
    if not sites.any():
        raise UndefinedBoundaryError("no sites to measure distance to")
    h, w = sites.shape
    sy, sx = np.nonzero(sites)
    ys, xs = np.mgrid[0:h, 0:w]
    ddx = xs[:, :, None] - sx[None, None, :]
    ddy = ys[:, :, None] - sy[None, None, :]
    return np.min(ddx.astype(np.int64) ** 2 + ddy.astype(np.int64) ** 2, axis=2)


def _signed_from_squared(mask: np.ndarray, sq: np.ndarray, clip_radius) -> np.ndarray:
    dist = np.sqrt(sq.astype(np.float64))
    signed = np.where(mask.astype(bool), -dist, dist)
    signed[sq == 0] = 0.0  # boundary pixels: avoid negative zero
    if clip_radius is not None:
        if clip_radius <= 0:
            raise ValueError("clip_radius must be positive")
        signed = np.clip(signed, -clip_radius, clip_radius)
    return signed


def signed_edt(mask: np.ndarray, clip_radius: float | None = None) -> np.ndarray:
    """Signed distance to the nearest boundary pixel: negative inside,
    zero on the boundary, positive outside.

    clip_radius, when given, clamps values to [-clip_radius, clip_radius]
    so far-field distances cannot dominate downstream square losses.
    """
    mask = _check_two_classes(mask)
    return _signed_from_squared(mask, _squared_edt(boundary_pixels(mask)), clip_radius)


def brute_force_edt(mask: np.ndarray, clip_radius: float | None = None) -> np.ndarray:
    """Same contract as signed_edt, computed by exhaustive minimization."""
    mask = _check_two_classes(mask)
    return _signed_from_squared(mask, _brute_squared(boundary_pixels(mask)), clip_radius)


def lsf_to_soft_mask(lsf: np.ndarray, k: float, sign: float = -1.0) -> np.ndarray:
    """Convert a level set back to a soft mask via sigmoid(sign * k * L).

    The default sign -1 sends the (negative-valued) interior above 0.5 so
    the soft mask shares orientation with a foreground mask; pass +1 for
    the orientation where the interior falls below 0.5. Values saturate to
    exactly 0 or 1 once |k * L| exceeds float range, and equal 0.5 exactly
    on the boundary.
    """
    if not k > 0:
        raise ValueError(f"sigmoid steepness k must be > 0, got {k}")
    if sign not in (-1.0, 1.0):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    lsf = np.asarray(lsf, dtype=np.float64)
    return sigmoid(sign * k * lsf)
