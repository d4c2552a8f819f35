"""Differentiable 2D Gaussian splat.

A splat is the anisotropic Gaussian

    G(x, y) = exp(-1/2 * d^T S^-1 d),   d = (x - mu_x, y - mu_y),

with covariance S = R diag(s_x^2, s_y^2) R^T and R the rotation by r
radians. Rasterized densely at pixel centers it gives a soft elliptical
mask with value 1 exactly at the center. render_backward returns the
exact derivative of sum(upstream * G) with respect to the five
parameters, so any scalar loss on the rendered field can be pulled back
through the renderer analytically.

The parameter vector is (mu_x, mu_y, s_x, s_y, r). An amplitude slot
exists on the record for forward experiments but is fixed at 1.0 by
default and deliberately excluded from the gradient path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateScaleError
from .grid import as_mask, pixel_centers

# Scales are clamped at this floor so the covariance stays invertible and
# gradients stay finite; optimizers project onto the bound after each step.
EPS_SCALE = 1e-3

PARAM_NAMES = ("mu_x", "mu_y", "s_x", "s_y", "r")


@dataclass(frozen=True)
class GaussianSplat:
    """Five geometric parameters of one elliptical splat (pixel units)."""

    mu_x: float
    mu_y: float
    s_x: float
    s_y: float
    r: float
    amplitude: float = 1.0

    def __post_init__(self):
        vals = (self.mu_x, self.mu_y, self.s_x, self.s_y, self.r, self.amplitude)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"splat parameters must be finite, got {vals}")
        if self.s_x < EPS_SCALE or self.s_y < EPS_SCALE:
            raise DegenerateScaleError(
                f"scales ({self.s_x}, {self.s_y}) below minimum {EPS_SCALE}"
            )

    def as_vector(self) -> np.ndarray:
        return np.array([self.mu_x, self.mu_y, self.s_x, self.s_y, self.r])

    @classmethod
    def from_vector(cls, v, amplitude: float = 1.0) -> "GaussianSplat":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (5,):
            raise ValueError(f"expected 5 parameters, got shape {v.shape}")
        return cls(float(v[0]), float(v[1]), float(v[2]), float(v[3]), float(v[4]), amplitude)

    def to_dict(self) -> dict:
        return {name: float(getattr(self, name)) for name in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianSplat":
        return cls(**{name: float(d[name]) for name in PARAM_NAMES})


@dataclass(frozen=True)
class SplatGradient:
    """Derivative of a downstream scalar with respect to each parameter."""

    d_mu_x: float
    d_mu_y: float
    d_s_x: float
    d_s_y: float
    d_r: float

    def as_vector(self) -> np.ndarray:
        return np.array([self.d_mu_x, self.d_mu_y, self.d_s_x, self.d_s_y, self.d_r])


def build_covariance(splat: GaussianSplat) -> np.ndarray:
    """Covariance matrix R diag(s_x^2, s_y^2) R^T (symmetric positive definite)."""
    c, s = math.cos(splat.r), math.sin(splat.r)
    rot = np.array([[c, -s], [s, c]])
    return rot @ np.diag([splat.s_x**2, splat.s_y**2]) @ rot.T


def _inverse_covariance_terms(splat: GaussianSplat):
    """Entries (a, b, c2) of the inverse covariance [[a, b], [b, c2]]."""
    co, si = math.cos(splat.r), math.sin(splat.r)
    ix, iy = 1.0 / splat.s_x**2, 1.0 / splat.s_y**2
    a = co * co * ix + si * si * iy
    b = si * co * (ix - iy)
    c2 = si * si * ix + co * co * iy
    return a, b, c2, co, si


def render(splat: GaussianSplat, width: int, height: int) -> np.ndarray:
    """Rasterize the splat over every pixel center of a width x height grid.

    Values lie in [0, 1]; the maximum 1.0 is hit exactly when a pixel
    center coincides with the splat center. Far tails underflow to 0.0
    beyond roughly 38 standard deviations, which is the closest float64
    can come to the ideal open interval.
    """
    if width < 1 or height < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {width}x{height}")
    a, b, c2, _, _ = _inverse_covariance_terms(splat)
    xs, ys = pixel_centers(width, height)
    dx = xs - splat.mu_x
    dy = ys - splat.mu_y
    q = 0.5 * (a * dx * dx + 2.0 * b * dx * dy + c2 * dy * dy)
    return splat.amplitude * np.exp(-q)


def render_backward(splat: GaussianSplat, upstream: np.ndarray) -> SplatGradient:
    """Gradient of sum(upstream * render(splat)) w.r.t. the 5 parameters.

    With A = S^-1 = [[a, b], [b, c2]] and d = (dx, dy):

        dG/dmu_x = G * (a dx + b dy)
        dG/dmu_y = G * (b dx + c2 dy)
        dG/ds_x  = G * (cos(r) dx + sin(r) dy)^2 / s_x^3
        dG/ds_y  = G * (sin(r) dx - cos(r) dy)^2 / s_y^3
        dG/dr    = -G * u * (sin(2r) (dy^2 - dx^2) / 2 + cos(2r) dx dy)

    where u = 1/s_x^2 - 1/s_y^2. Each line is the chain rule through the
    quadratic form; the scale lines collapse because the cross terms
    complete a square along the rotated axes.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.ndim != 2:
        raise ValueError(f"upstream gradient must be 2-D, got shape {upstream.shape}")
    height, width = upstream.shape
    a, b, c2, co, si = _inverse_covariance_terms(splat)
    xs, ys = pixel_centers(width, height)
    dx = xs - splat.mu_x
    dy = ys - splat.mu_y
    q = 0.5 * (a * dx * dx + 2.0 * b * dx * dy + c2 * dy * dy)
    g = splat.amplitude * np.exp(-q)
    w = upstream * g

    u = 1.0 / splat.s_x**2 - 1.0 / splat.s_y**2
    axial = co * dx + si * dy
    cross = si * dx - co * dy
    dq_dr = 0.5 * math.sin(2.0 * splat.r) * (dy * dy - dx * dx) + math.cos(
        2.0 * splat.r
    ) * dx * dy

    return SplatGradient(
        d_mu_x=float(np.sum(w * (a * dx + b * dy))),
        d_mu_y=float(np.sum(w * (b * dx + c2 * dy))),
        d_s_x=float(np.sum(w * axial * axial) / splat.s_x**3),
        d_s_y=float(np.sum(w * cross * cross) / splat.s_y**3),
        d_r=float(-u * np.sum(w * dq_dr)),
    )


def splat_from_mask_moments(mask: np.ndarray) -> GaussianSplat:
    """Closed-form splat estimate from a mask's first and second moments.

    The center is the foreground centroid. The principal axes of the
    second-moment matrix give the rotation; eigenvalues are converted to
    scales assuming the mask is the 0.5 level of a rendered splat, whose
    filled ellipse has semi-axes sqrt(2 ln 2) * s and uniform second
    moment (semi-axis)^2 / 4.
    """
    mask = as_mask(mask)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise ValueError("mask has no foreground; cannot take moments")
    px = xs + 0.5
    py = ys + 0.5
    mu_x = float(px.mean())
    mu_y = float(py.mean())
    dx = px - mu_x
    dy = py - mu_y
    cov = np.array(
        [
            [float(np.mean(dx * dx)), float(np.mean(dx * dy))],
            [float(np.mean(dx * dy)), float(np.mean(dy * dy))],
        ]
    )
    evals, evecs = np.linalg.eigh(cov)  # ascending
    semi_minor = 2.0 * math.sqrt(max(evals[0], 0.0))
    semi_major = 2.0 * math.sqrt(max(evals[1], 0.0))
    k = math.sqrt(2.0 * math.log(2.0))  # semi-axis of the 0.5 level per unit scale
    major = evecs[:, 1]
    r = math.atan2(major[1], major[0])
    return GaussianSplat(
        mu_x=mu_x,
        mu_y=mu_y,
        s_x=max(semi_major / k, EPS_SCALE),
        s_y=max(semi_minor / k, EPS_SCALE),
        r=r,
    )


def perturbed(splat: GaussianSplat, rng: np.random.Generator, rel: float = 0.2) -> GaussianSplat:
    """Randomly perturb a splat: centers by +-rel of the scales, scales by
    a factor in [1-rel, 1+rel], rotation by +-rel radians."""
    return replace(
        splat,
        mu_x=splat.mu_x + rng.uniform(-rel, rel) * splat.s_x,
        mu_y=splat.mu_y + rng.uniform(-rel, rel) * splat.s_y,
        s_x=max(splat.s_x * (1.0 + rng.uniform(-rel, rel)), EPS_SCALE),
        s_y=max(splat.s_y * (1.0 + rng.uniform(-rel, rel)), EPS_SCALE),
        r=splat.r + rng.uniform(-rel, rel),
    )
