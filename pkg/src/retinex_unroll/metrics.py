"""Full-reference scores and the MAE + FFT training loss used as metrics.

The l1 losses are averaged over elements (MAE) or coefficients (FFT) rather
than summed, so values do not grow with resolution.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "ScoreReport",
    "DEFAULT_FFT_WEIGHT",
    "mae_loss",
    "fft_loss",
    "combined_loss",
    "psnr",
    "ssim",
    "score",
]

DEFAULT_FFT_WEIGHT = 0.1
NORMALIZATION_NOTE = "l1 losses averaged over elements"

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WIN = 11
SSIM_SIGMA = 1.5


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def mae_loss(a: np.ndarray, b: np.ndarray) -> float:
    _same_shape(a, b)
    return float(np.mean(np.abs(a - b)))


def fft_loss(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over DFT coefficients of ``|Re(Fa - Fb)| + |Im(Fa - Fb)|``.

    The transform is the unnormalized 2-D DFT over the spatial axes.
    """
    _same_shape(a, b)
    diff = np.fft.fft2(np.asarray(a, dtype=np.float64) - b, axes=(0, 1))
    return float(np.mean(np.abs(diff.real) + np.abs(diff.imag)))


def combined_loss(a: np.ndarray, b: np.ndarray, sigma: float = DEFAULT_FFT_WEIGHT) -> float:
    return mae_loss(a, b) + sigma * fft_loss(a, b)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio for unit peak; ``inf`` for identical inputs."""
    _same_shape(a, b)
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size: int = SSIM_WIN, sigma: float = SSIM_SIGMA) -> np.ndarray:
    r = np.arange(size) - size // 2
    g = np.exp(-(r**2) / (2.0 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def _filter_valid(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    patches = sliding_window_view(x, window.shape, axis=(0, 1))
    return np.tensordot(patches, window, axes=([-2, -1], [0, 1]))


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Mean structural similarity over all full 11x11 Gaussian windows and channels."""
    _same_shape(a, b)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if min(a.shape[:2]) < SSIM_WIN:
        raise ValueError(f"ssim needs images of at least {SSIM_WIN}x{SSIM_WIN}")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    win = _gaussian_window()
    mu_a = _filter_valid(a, win)
    mu_b = _filter_valid(b, win)
    var_a = _filter_valid(a * a, win) - mu_a**2
    var_b = _filter_valid(b * b, win) - mu_b**2
    cov = _filter_valid(a * b, win) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class ScoreReport:
    psnr: float
    ssim: float
    mae: float
    fft_loss: float
    combined: float

    def to_dict(self) -> dict:
        return asdict(self)


def score(pred: np.ndarray, gt: np.ndarray, sigma: float = DEFAULT_FFT_WEIGHT) -> ScoreReport:
    return ScoreReport(
        psnr=psnr(pred, gt),
        ssim=ssim(pred, gt),
        mae=mae_loss(pred, gt),
        fft_loss=fft_loss(pred, gt),
        combined=combined_loss(pred, gt, sigma),
    )
