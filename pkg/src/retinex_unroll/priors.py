"""Classical data operators used as proximal steps inside the unrolled solver.

Each operator maps an image (H, W, C) or an illuminance map (H, W) to an
array of the same shape. All of them return a constant input unchanged.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .imaging import forward_fft, inverse_fft

__all__ = [
    "DataOperator",
    "apply",
    "tv_denoise",
    "tv_objective",
    "gaussian_smooth",
    "median_smooth",
    "OperatorSlots",
]

OPERATOR_KINDS = ("identity", "tv", "gaussian_smooth", "median")


@dataclass(frozen=True)
class DataOperator:
    """A parameterized denoising step.

    ``weight`` and ``iters`` are used by ``tv``, ``sigma`` by
    ``gaussian_smooth`` and ``radius`` by ``median``.
    """

    kind: str = "identity"
    weight: float = 0.0
    iters: int = 30
    sigma: float = 1.0
    radius: int = 1

    def __post_init__(self):
        if self.kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.weight < 0 or self.iters < 0 or self.sigma < 0 or self.radius < 0:
            raise ValueError(f"operator parameters must be nonnegative: {self}")

    @classmethod
    def identity(cls) -> DataOperator:
        return cls("identity")

    @classmethod
    def tv(cls, weight: float, iters: int = 30) -> DataOperator:
        return cls("tv", weight=weight, iters=iters)

    @classmethod
    def gaussian(cls, sigma: float) -> DataOperator:
        return cls("gaussian_smooth", sigma=sigma)

    @classmethod
    def median(cls, radius: int) -> DataOperator:
        return cls("median", radius=radius)

    def to_dict(self) -> dict:
        return asdict(self)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return apply(self, x)

    __call__ = apply


def apply(op: DataOperator, x: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise ValueError("data operator input contains non-finite values")
    if op.kind == "identity":
        return np.array(x, dtype=np.float64)
    if op.kind == "tv":
        return tv_denoise(x, op.weight, op.iters)
    if op.kind == "gaussian_smooth":
        return gaussian_smooth(x, op.sigma)
    return median_smooth(x, op.radius)


def _grad(u):
    return np.roll(u, -1, axis=0) - u, np.roll(u, -1, axis=1) - u


def _div(px, py):
    # negative adjoint of _grad
    return (px - np.roll(px, 1, axis=0)) + (py - np.roll(py, 1, axis=1))


def tv_objective(u: np.ndarray, x: np.ndarray, weight: float) -> float:
    """``0.5 * ||u - x||^2 + weight * TV(u)`` with isotropic circular TV."""
    gx, gy = _grad(u)
    return 0.5 * float(np.sum((u - x) ** 2)) + weight * float(np.sum(np.sqrt(gx**2 + gy**2)))


def tv_denoise(x: np.ndarray, weight: float, iters: int = 30, tau: float = 0.25) -> np.ndarray:
    """Approximate TV proximal map by Chambolle's dual projection.

    Runs exactly ``iters`` fixed-point steps on the dual field, each channel
    on its own. ``weight == 0`` returns ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    if weight == 0 or iters == 0:
        return x.copy()
    px = np.zeros_like(x)
    py = np.zeros_like(x)
    for _ in range(iters):
        gx, gy = _grad(_div(px, py) - x / weight)
        # channels are independent: the norm is taken per pixel per channel
        norm = 1.0 + tau * np.sqrt(gx**2 + gy**2)
        px = (px + tau * gx) / norm
        py = (py + tau * gy) / norm
    return x - weight * _div(px, py)


def gaussian_smooth(x: np.ndarray, sigma: float) -> np.ndarray:
    """Circular Gaussian filtering; preserves the mean exactly."""
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    h, w = x.shape[:2]
    # sampled on the full periodic grid so the filter is exact for any image size
    dy = np.minimum(np.arange(h), h - np.arange(h))
    dx = np.minimum(np.arange(w), w - np.arange(w))
    g = np.exp(-(dy[:, None] ** 2 + dx[None, :] ** 2) / (2.0 * sigma**2))
    otf = np.fft.fft2(g / g.sum())
    if x.ndim == 3:
        otf = otf[:, :, None]
    return inverse_fft(forward_fft(x) * otf)


def median_smooth(x: np.ndarray, radius: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if radius == 0:
        return x.copy()
    size = (2 * radius + 1, 2 * radius + 1) + (1,) * (x.ndim - 2)
    return ndimage.median_filter(x, size=size, mode="wrap")


@dataclass(frozen=True)
class OperatorSlots:
    """Operators for the three learned-prior slots of the solver.

    ``reflectance`` acts on P, ``illuminance`` on Q and ``latent`` on Z.
    """

    reflectance: DataOperator = DataOperator("tv", weight=0.005, iters=30)
    illuminance: DataOperator = DataOperator("gaussian_smooth", sigma=20.0)
    latent: DataOperator = DataOperator("tv", weight=0.004, iters=30)

    @classmethod
    def identity(cls) -> OperatorSlots:
        return cls(DataOperator.identity(), DataOperator.identity(), DataOperator.identity())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> OperatorSlots:
        return cls(**{name: DataOperator(**fields) for name, fields in data.items()})
