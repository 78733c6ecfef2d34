"""Image containers, circular convolution and FFT helpers.

Images are plain float64 numpy arrays of shape (H, W, C) with C in {1, 3}.
Illuminance maps are (H, W). Kernels are odd-sized square, nonnegative and
sum to one. All spatial operators use a periodic (circular) boundary so that
spatial convolution and pointwise spectral products agree exactly.

Every function here is pure; calling them from several threads at once is
safe. Results do not depend on threading beyond floating-point
reassociation (agreement within 1e-9).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

__all__ = [
    "MIN_SIDE",
    "as_image",
    "check_image",
    "check_kernel",
    "normalize_kernel",
    "delta_kernel",
    "conv2d_circular",
    "forward_fft",
    "inverse_fft",
    "kernel_to_otf",
    "flip_kernel",
    "luma",
    "read_png",
    "write_png",
    "to_uint8",
]

MIN_SIDE = 8
KERNEL_SUM_TOL = 1e-9

# ITU-R BT.601 weights
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def as_image(data) -> np.ndarray:
    """Coerce ``data`` to a validated (H, W, C) float64 image.

    2-D input is treated as a single-channel image.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    check_image(arr)
    return arr


def check_image(img: np.ndarray, min_side: int = MIN_SIDE) -> None:
    """Raise ``ValueError`` unless ``img`` satisfies the image invariants."""
    if img.ndim != 3:
        raise ValueError(f"image must be (H, W, C), got shape {img.shape}")
    h, w, c = img.shape
    if c not in (1, 3):
        raise ValueError(f"image must have 1 or 3 channels, got {c}")
    if h < min_side or w < min_side:
        raise ValueError(f"image must be at least {min_side}x{min_side}, got {h}x{w}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")


def check_kernel(k: np.ndarray) -> None:
    """Raise ``ValueError`` unless ``k`` is odd, square, nonnegative and normalized."""
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"kernel must be square 2-D, got shape {k.shape}")
    if k.shape[0] % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {k.shape[0]}")
    if not np.all(np.isfinite(k)) or np.any(k < 0):
        raise ValueError("kernel taps must be finite and nonnegative")
    if abs(k.sum() - 1.0) > KERNEL_SUM_TOL:
        raise ValueError(f"kernel must sum to 1, got {k.sum()!r}")


def normalize_kernel(taps) -> np.ndarray:
    """Return ``taps`` scaled to unit sum; raises if the kernel is all zero."""
    k = np.asarray(taps, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
        raise ValueError(f"kernel must be square with odd size, got shape {k.shape}")
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise ValueError("kernel taps must be finite and nonnegative")
    total = k.sum()
    if total <= 0:
        raise ValueError("kernel is all zero")
    return k / total


def delta_kernel(size: int = 1) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and positive, got {size}")
    k = np.zeros((size, size))
    k[size // 2, size // 2] = 1.0
    return k


def _check_fits(ksize: int, h: int, w: int) -> None:
    if ksize > min(h, w):
        raise ValueError(f"kernel of size {ksize} does not fit a {h}x{w} image")


def conv2d_circular(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Periodic 2-D convolution of every channel with ``k``.

    Computed in the spatial domain as a sum of shifted copies, which keeps it
    independent of the FFT path used by the solver. Works on (H, W) and
    (H, W, C) arrays.
    """
    h, w = img.shape[:2]
    size = k.shape[0]
    _check_fits(size, h, w)
    c = size // 2
    out = np.zeros_like(img, dtype=np.float64)
    for u in range(size):
        for v in range(size):
            tap = k[u, v]
            if tap != 0.0:
                out += tap * np.roll(img, (u - c, v - c), axis=(0, 1))
    return out


def forward_fft(img: np.ndarray) -> np.ndarray:
    """Unnormalized 2-D DFT over the two spatial axes.

    A delta image maps to an all-ones spectrum; Parseval reads
    ``sum |x|^2 == sum |X|^2 / (H * W)``.
    """
    return np.fft.fft2(img, axes=(0, 1))


def inverse_fft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse of :func:`forward_fft`, returning the real part."""
    return np.real(np.fft.ifft2(spectrum, axes=(0, 1)))


def kernel_to_otf(k: np.ndarray, h: int, w: int) -> np.ndarray:
    """Zero-pad ``k`` to (h, w), centre it on index (0, 0) and transform.

    With this layout ``conv2d_circular(x, k)`` equals
    ``inverse_fft(forward_fft(x) * otf)`` (broadcast over channels).
    """
    size = k.shape[0]
    _check_fits(size, h, w)
    padded = np.zeros((h, w))
    padded[:size, :size] = k
    padded = np.roll(padded, (-(size // 2), -(size // 2)), axis=(0, 1))
    return np.fft.fft2(padded)


def flip_kernel(k: np.ndarray) -> np.ndarray:
    """Reverse taps along both axes; convolving with it is the adjoint blur."""
    return np.ascontiguousarray(k[::-1, ::-1])


def luma(img: np.ndarray) -> np.ndarray:
    """Single-channel (H, W) brightness of an (H, W, C) image."""
    if img.shape[2] == 1:
        return img[:, :, 0].copy()
    return img @ _LUMA_WEIGHTS


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def read_png(path: str | Path) -> np.ndarray:
    """Load an 8-bit PNG as a float image in [0, 1].

    Grayscale files give one channel; anything else is converted to RGB.
    """
    with PILImage.open(path) as im:
        if im.mode in ("L", "I", "I;16", "1"):
            arr = np.asarray(im.convert("L"), dtype=np.float64)[:, :, None]
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def write_png(path: str | Path, img: np.ndarray) -> None:
    """Clamp to [0, 1], quantize to 8 bits and write. Accepts (H, W) or (H, W, C)."""
    data = to_uint8(img)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    PILImage.fromarray(data).save(path, format="PNG")
