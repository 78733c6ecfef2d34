"""Synthetic low-light blurry image generation with known ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .imaging import check_image, conv2d_circular, delta_kernel, luma, normalize_kernel

__all__ = [
    "DEFAULT_KERNEL_SIZE",
    "DegradeSpec",
    "make_kernel",
    "illuminance_map",
    "degrade",
    "checkerboard",
    "synthetic_scene",
]

DEFAULT_KERNEL_SIZE = 31
KERNEL_KINDS = ("delta", "gaussian", "motion")

# keeps the true illuminance strictly positive on black pixels
_LUMA_FLOOR = 1e-3


@dataclass(frozen=True)
class DegradeSpec:
    """Parameters of one synthetic degradation.

    ``kernel_kind`` selects the blur: ``gaussian`` uses ``sigma``, ``motion``
    uses ``length`` and ``angle`` (degrees). The darkened luma equals
    ``illum_scale * luma**illum_gamma``.
    """

    kernel_kind: str = "gaussian"
    sigma: float = 1.5
    length: float = 9.0
    angle: float = 0.0
    kernel_size: int = DEFAULT_KERNEL_SIZE
    illum_scale: float = 0.2
    illum_gamma: float = 1.0
    noise_sigma: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.kernel_kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kernel_kind!r}")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd and positive")
        if not 0.0 < self.illum_scale <= 1.0:
            raise ValueError("illum_scale must lie in (0, 1]")
        if self.illum_gamma < 1.0:
            raise ValueError("illum_gamma must be >= 1")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def _gaussian_taps(size: int, sigma: float) -> np.ndarray:
    r = np.arange(size) - size // 2
    yy, xx = np.meshgrid(r, r, indexing="ij")
    return np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))


def _motion_taps(size: int, length: float, angle: float) -> np.ndarray:
    # Supersampled line segment through the centre, split bilinearly.
    taps = np.zeros((size, size))
    c = size // 2
    theta = np.deg2rad(angle)
    n = max(int(np.ceil(length * 8)), 2)
    t = np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, n) if length > 1 else np.zeros(1)
    xs = c + t * np.cos(theta)
    ys = c - t * np.sin(theta)
    for x, y in zip(xs, ys):
        x0, y0 = int(np.floor(x)), int(np.floor(y))
        fx, fy = x - x0, y - y0
        for dy, wy in ((0, 1 - fy), (1, fy)):
            for dx, wx in ((0, 1 - fx), (1, fx)):
                yi, xi = y0 + dy, x0 + dx
                if 0 <= yi < size and 0 <= xi < size:
                    taps[yi, xi] += wy * wx
    return taps


def make_kernel(spec: DegradeSpec) -> np.ndarray:
    """Build the normalized blur kernel described by ``spec``."""
    size = spec.kernel_size
    if spec.kernel_kind == "delta":
        return delta_kernel(size)
    if spec.kernel_kind == "gaussian":
        if spec.sigma <= 0:
            raise ValueError("gaussian sigma must be > 0")
        taps = _gaussian_taps(size, spec.sigma)
    else:
        if spec.length < 1:
            raise ValueError("motion length must be >= 1")
        taps = _motion_taps(size, spec.length, spec.angle)
    # underflow for tiny sigma leaves only the centre tap, never all zeros
    return normalize_kernel(taps)


def illuminance_map(gt: np.ndarray, spec: DegradeSpec) -> np.ndarray:
    """True (H, W) illuminance used to darken ``gt``.

    With ``illum_gamma == 1`` this is the constant ``illum_scale``.
    """
    if spec.illum_gamma == 1.0:
        return np.full(gt.shape[:2], spec.illum_scale)
    y = np.clip(luma(gt), _LUMA_FLOOR, 1.0)
    return spec.illum_scale * y ** (spec.illum_gamma - 1.0)


def degrade(gt: np.ndarray, spec: DegradeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Darken, blur and add noise to ``gt``.

    Returns ``(x, kernel, illuminance)`` where
    ``x = clip(kernel * (gt * illuminance) + noise, 0, 1)``.
    """
    check_image(gt)
    kernel = make_kernel(spec)
    illum = illuminance_map(gt, spec)
    dark = gt * illum[:, :, None]
    x = conv2d_circular(dark, kernel)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        x = x + rng.normal(0.0, spec.noise_sigma, size=x.shape)
    return np.clip(x, 0.0, 1.0), kernel, illum


def checkerboard(size: int = 64, tile: int = 8, channels: int = 3, low=0.2, high=0.8) -> np.ndarray:
    idx = (np.arange(size) // tile)
    board = (idx[:, None] + idx[None, :]) % 2
    img = np.where(board == 1, high, low).astype(np.float64)
    return np.repeat(img[:, :, None], channels, axis=2)


def synthetic_scene(size: int = 64, seed: int = 0, n_shapes: int = 12) -> np.ndarray:
    """Piecewise-constant RGB test scene of rectangles and discs in [0.05, 0.95]."""
    rng = np.random.default_rng(seed)
    img = np.empty((size, size, 3))
    img[:] = rng.uniform(0.2, 0.8, size=3)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(n_shapes):
        colour = rng.uniform(0.05, 0.95, size=3)
        cy, cx = rng.uniform(0, size, size=2)
        if rng.random() < 0.5:
            hh, hw = rng.uniform(size / 16, size / 4, size=2)
            mask = (np.abs(yy - cy) <= hh) & (np.abs(xx - cx) <= hw)
        else:
            r = rng.uniform(size / 16, size / 5)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r**2
        img[mask] = colour
    return img
