"""Synthetic lesion masks and the augmentation pipeline.

Three shape families with known generating parameters: ellipses (a
thresholded splat render), crescents (primary ellipse minus a shifted
secondary, the non-elliptical failure case), and blobs (an ellipse whose
boundary radius is modulated by a seeded low-order harmonic series).

Augmentations pair a field with its mask: flips and quarter-turn
rotations apply to both exactly; resizing is bilinear on the field and
nearest-neighbor on the mask; Gaussian noise touches the field only.
Everything is deterministic per seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError
from .grid import as_field, as_mask, threshold
from .splat import GaussianSplat, render


@dataclass(frozen=True)
class ShapeSpec:
    """Generating recipe for one synthetic mask.

    kind "ellipse" uses splat + level only. kind "crescent" subtracts the
    secondary splat's ellipse. kind "blob" perturbs the ellipse boundary
    radius by 1 + amplitude * (seeded harmonics up to `harmonics`).
    """

    kind: str
    splat: GaussianSplat
    level: float = 0.5
    secondary: GaussianSplat | None = None
    noise_amplitude: float = 0.0
    harmonics: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("ellipse", "crescent", "blob"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be in (0, 1), got {self.level}")
        if self.kind == "crescent" and self.secondary is None:
            raise ValueError("crescent needs a secondary splat")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")
        if not 1 <= self.harmonics <= 4:
            raise ValueError("harmonics must be in [1, 4]")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "splat": self.splat.to_dict(), "level": self.level}
        if self.secondary is not None:
            d["secondary"] = self.secondary.to_dict()
        if self.kind == "blob":
            d["noise_amplitude"] = self.noise_amplitude
            d["harmonics"] = self.harmonics
            d["seed"] = self.seed
        return d


def _whitened_angle(splat: GaussianSplat, width: int, height: int) -> np.ndarray:
    """Polar angle of each pixel center in the splat's unit (whitened) frame."""
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    dx = xs + 0.5 - splat.mu_x
    dy = ys + 0.5 - splat.mu_y
    c, s = math.cos(splat.r), math.sin(splat.r)
    ux = (c * dx + s * dy) / splat.s_x
    uy = (-s * dx + c * dy) / splat.s_y
    return np.arctan2(uy, ux)


def _blob_mask(spec: ShapeSpec, width: int, height: int) -> np.ndarray:
    g = render(spec.splat, width, height)
    if spec.noise_amplitude == 0.0:
        return threshold(g, spec.level)
    rng = np.random.default_rng(spec.seed)
    coefs = rng.uniform(-1.0, 1.0, size=2 * spec.harmonics)
    norm = np.sum(np.abs(coefs))
    if norm > 0:
        coefs = coefs / norm
    phi = _whitened_angle(spec.splat, width, height)
    rho = np.ones_like(phi)
    for m in range(1, spec.harmonics + 1):
        rho += spec.noise_amplitude * (
            coefs[2 * (m - 1)] * np.cos(m * phi) + coefs[2 * m - 1] * np.sin(m * phi)
        )
    rho = np.maximum(rho, 0.2)
    # boundary radius rho(phi) in the whitened frame == comparing the
    # render against a per-pixel level raised to rho^2
    return (g >= spec.level ** (rho * rho)).astype(np.uint8)


def generate(spec: ShapeSpec, width: int, height: int) -> tuple[np.ndarray, dict]:
    """Render a shape spec to a mask; returns (mask, generating parameters).

    Raises GenerationError when the result would not contain both classes.
    """
    if spec.kind == "ellipse":
        mask = threshold(render(spec.splat, width, height), spec.level)
    elif spec.kind == "crescent":
        primary = threshold(render(spec.splat, width, height), spec.level)
        secondary = threshold(render(spec.secondary, width, height), spec.level)
        mask = (primary.astype(bool) & ~secondary.astype(bool)).astype(np.uint8)
    else:
        mask = _blob_mask(spec, width, height)
    total = int(mask.sum())
    if total == 0 or total == mask.size:
        raise GenerationError(
            f"{spec.kind} spec produced a single-class mask ({total} foreground)"
        )
    return mask, spec.to_dict()


def random_ellipse_spec(rng: np.random.Generator, width: int, height: int) -> ShapeSpec:
    """Seeded ellipse that comfortably fits the grid with both classes."""
    span = min(width, height)
    s_major = rng.uniform(0.14, 0.22) * span
    s_minor = s_major * rng.uniform(0.55, 0.95)
    return ShapeSpec(
        kind="ellipse",
        splat=GaussianSplat(
            mu_x=width / 2.0 + rng.uniform(-0.08, 0.08) * width,
            mu_y=height / 2.0 + rng.uniform(-0.08, 0.08) * height,
            s_x=s_major,
            s_y=s_minor,
            r=rng.uniform(0.0, math.pi),
        ),
    )


def random_crescent_spec(rng: np.random.Generator, width: int, height: int) -> ShapeSpec:
    """Seeded crescent: a secondary ellipse bites into the primary."""
    base = random_ellipse_spec(rng, width, height)
    p = base.splat
    angle = rng.uniform(0.0, 2.0 * math.pi)
    # park the bite center inside the primary so the subtraction leaves a
    # genuine concavity rather than a shaved edge
    reach = rng.uniform(0.9, 1.3)
    return ShapeSpec(
        kind="crescent",
        splat=p,
        secondary=GaussianSplat(
            mu_x=p.mu_x + reach * p.s_x * math.cos(angle),
            mu_y=p.mu_y + reach * p.s_y * math.sin(angle),
            s_x=p.s_x * rng.uniform(0.65, 0.9),
            s_y=p.s_y * rng.uniform(0.65, 0.9),
            r=p.r,
        ),
    )


def random_blob_spec(
    rng: np.random.Generator, width: int, height: int, amplitude: float = 0.15
) -> ShapeSpec:
    base = random_ellipse_spec(rng, width, height)
    return ShapeSpec(
        kind="blob",
        splat=base.splat,
        noise_amplitude=amplitude,
        seed=int(rng.integers(0, 2**31)),
    )


def ellipse_with_area(
    like: GaussianSplat, area: float, level: float = 0.5
) -> GaussianSplat:
    """Rescale an ellipse's axes so its thresholded region has ~`area` pixels.

    The level-`t` region of a rendered splat has continuous area
    2 pi ln(1/t) s_x s_y; both scales are multiplied by the square root
    of the required ratio, preserving aspect and orientation.
    """
    if area <= 0:
        raise ValueError("area must be positive")
    current = 2.0 * math.pi * math.log(1.0 / level) * like.s_x * like.s_y
    f = math.sqrt(area / current)
    return GaussianSplat(like.mu_x, like.mu_y, like.s_x * f, like.s_y * f, like.r)


@dataclass(frozen=True)
class AugmentationConfig:
    """Probabilities and parameters of the augmentation pipeline.

    rotation_degrees are quarter-turn multiples so paired masks transform
    exactly. target_size None keeps the input size after resize-crop.
    """

    p_flip_h: float = 0.5
    p_flip_v: float = 0.5
    p_rotate: float = 0.5
    p_noise: float = 0.5
    p_resize_crop: float = 0.5
    noise_sigma: float = 0.05
    rotation_degrees: tuple = (90, 180, 270)
    scale_range: tuple = (0.8, 1.2)
    target_size: int | None = None

    def __post_init__(self):
        for name in ("p_flip_h", "p_flip_v", "p_rotate", "p_noise", "p_resize_crop"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")
        if any(d % 90 != 0 for d in self.rotation_degrees):
            raise ValueError("rotation_degrees must be multiples of 90")
        if not 0.0 < self.scale_range[0] <= self.scale_range[1]:
            raise ValueError(f"bad scale_range {self.scale_range}")


IDENTITY_AUGMENT = AugmentationConfig(
    p_flip_h=0.0, p_flip_v=0.0, p_rotate=0.0, p_noise=0.0, p_resize_crop=0.0
)


def rotate90(a: np.ndarray, quarter_turns: int) -> np.ndarray:
    """Exact counterclockwise rotation by 90-degree steps."""
    return np.ascontiguousarray(np.rot90(a, quarter_turns % 4))


def _resize_bilinear(a: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = a.shape
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    ys = np.clip(ys, 0.0, in_h - 1.0)
    xs = np.clip(xs, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = a[np.ix_(y0, x0)] * (1 - wx) + a[np.ix_(y0, x1)] * wx
    bot = a[np.ix_(y1, x0)] * (1 - wx) + a[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy


def _resize_nearest(a: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = a.shape
    ys = np.clip(np.rint((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5), 0, in_h - 1)
    xs = np.clip(np.rint((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5), 0, in_w - 1)
    return a[np.ix_(ys.astype(np.int64), xs.astype(np.int64))]


def _center_crop_or_pad(a: np.ndarray, out_h: int, out_w: int, fill=0):
    in_h, in_w = a.shape
    out = np.full((out_h, out_w), fill, dtype=a.dtype)
    src_y = max((in_h - out_h) // 2, 0)
    src_x = max((in_w - out_w) // 2, 0)
    dst_y = max((out_h - in_h) // 2, 0)
    dst_x = max((out_w - in_w) // 2, 0)
    h = min(in_h, out_h)
    w = min(in_w, out_w)
    out[dst_y : dst_y + h, dst_x : dst_x + w] = a[src_y : src_y + h, src_x : src_x + w]
    return out


def resize_crop(field, mask, scale: float, target_h: int, target_w: int):
    """Rescale a (field, mask) pair then center-crop or pad to the target."""
    h = max(int(round(field.shape[0] * scale)), 1)
    w = max(int(round(field.shape[1] * scale)), 1)
    f = _center_crop_or_pad(_resize_bilinear(field, h, w), target_h, target_w, 0.0)
    m = _center_crop_or_pad(_resize_nearest(mask, h, w), target_h, target_w, 0)
    return f, m


def rotate_field_bilinear(field: np.ndarray, degrees: float) -> np.ndarray:
    """Arbitrary-angle rotation of a real-valued field about the grid center.

    Bilinear resampling, zero fill outside; not exact, so masks must use
    rotate90 instead.
    """
    field = as_field(field)
    h, w = field.shape
    cy, cx = h / 2.0, w / 2.0
    theta = math.radians(degrees)
    c, s = math.cos(theta), math.sin(theta)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    # inverse-rotate output pixel centers into source coordinates
    dx = xs + 0.5 - cx
    dy = ys + 0.5 - cy
    sx = c * dx + s * dy + cx - 0.5
    sy = -s * dx + c * dy + cy - 0.5
    inside = (sx >= 0) & (sx <= w - 1) & (sy >= 0) & (sy <= h - 1)
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = sx - x0
    wy = sy - y0
    out = (
        field[y0, x0] * (1 - wx) * (1 - wy)
        + field[y0, x1] * wx * (1 - wy)
        + field[y1, x0] * (1 - wx) * wy
        + field[y1, x1] * wx * wy
    )
    return np.where(inside, out, 0.0)


def _draw_ops(cfg: AugmentationConfig, rng: np.random.Generator):
    """Sample one concrete augmentation; the draw order is fixed so a seed
    pins the whole transform."""
    ops = {
        "flip_h": rng.random() < cfg.p_flip_h,
        "flip_v": rng.random() < cfg.p_flip_v,
        "quarter_turns": 0,
        "scale": None,
        "noise": False,
    }
    if rng.random() < cfg.p_rotate and cfg.rotation_degrees:
        deg = cfg.rotation_degrees[rng.integers(0, len(cfg.rotation_degrees))]
        ops["quarter_turns"] = (deg // 90) % 4
    if rng.random() < cfg.p_resize_crop:
        ops["scale"] = float(rng.uniform(cfg.scale_range[0], cfg.scale_range[1]))
    ops["noise"] = rng.random() < cfg.p_noise
    return ops


def augment(field, mask, cfg: AugmentationConfig, seed: int):
    """Apply one seeded augmentation to a (field, mask) pair.

    Geometric operations hit both members identically; Gaussian noise is
    added to the field only.
    """
    field = as_field(field)
    mask = as_mask(mask)
    if field.shape != mask.shape:
        raise ValueError(f"paired shapes differ: {field.shape} vs {mask.shape}")
    rng = np.random.default_rng(seed)
    ops = _draw_ops(cfg, rng)

    if ops["flip_h"]:
        field, mask = field[:, ::-1], mask[:, ::-1]
    if ops["flip_v"]:
        field, mask = field[::-1, :], mask[::-1, :]
    if ops["quarter_turns"]:
        field = rotate90(field, ops["quarter_turns"])
        mask = rotate90(mask, ops["quarter_turns"])
    if ops["scale"] is not None:
        th = cfg.target_size or field.shape[0]
        tw = cfg.target_size or field.shape[1]
        field, mask = resize_crop(field, mask, ops["scale"], th, tw)
    if ops["noise"]:
        field = field + rng.normal(0.0, cfg.noise_sigma, size=field.shape)
    return np.ascontiguousarray(field), np.ascontiguousarray(mask)


def test_time_average(
    predict, field, cfg: AugmentationConfig, rounds: int = 3, seed: int = 0
) -> np.ndarray:
    """Average a predictor over augmented copies mapped back to the input frame.

    Only invertible operations participate (flips, quarter turns, noise);
    resize-crop is skipped because cropping discards pixels. Each round's
    prediction is inverse-transformed before averaging.
    """
    field = as_field(field)
    acc = np.zeros_like(field)
    for i in range(rounds):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        ops = _draw_ops(cfg, rng)
        f = field
        if ops["flip_h"]:
            f = f[:, ::-1]
        if ops["flip_v"]:
            f = f[::-1, :]
        if ops["quarter_turns"]:
            f = rotate90(f, ops["quarter_turns"])
        if ops["noise"]:
            f = f + rng.normal(0.0, cfg.noise_sigma, size=f.shape)
        pred = np.asarray(predict(np.ascontiguousarray(f)), dtype=np.float64)
        if ops["quarter_turns"]:
            pred = rotate90(pred, -ops["quarter_turns"])
        if ops["flip_v"]:
            pred = pred[::-1, :]
        if ops["flip_h"]:
            pred = pred[:, ::-1]
        if pred.shape != field.shape:
            raise ValueError(f"predictor returned shape {pred.shape}, want {field.shape}")
        acc += pred
    return acc / rounds
