"""Final stage: brighten the illuminance, clean the reflectance, recombine."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .imaging import luma
from .priors import DataOperator

__all__ = [
    "EnhanceSpec",
    "enhance_illuminance",
    "solve_gamma",
    "denoise_reflectance",
    "recompose",
    "brighten_luma",
]

ENHANCE_MODES = ("gamma", "target_mean")

# illuminance is kept strictly positive before taking powers
_ILLUM_FLOOR = 1e-6


@dataclass(frozen=True)
class EnhanceSpec:
    """``gamma`` mode applies ``l**gamma``; ``target_mean`` picks the exponent
    that brings the mean illuminance to ``target``."""

    mode: str = "target_mean"
    gamma: float = 1.0
    target: float = 0.5
    denoise: DataOperator = field(default_factory=lambda: DataOperator.gaussian(1.0))
    residual: bool = True

    def __post_init__(self):
        if self.mode not in ENHANCE_MODES:
            raise ValueError(f"unknown enhancement mode {self.mode!r}")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 < self.target < 1:
            raise ValueError("target must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> EnhanceSpec:
        data = dict(data)
        if "denoise" in data and isinstance(data["denoise"], dict):
            data["denoise"] = DataOperator(**data["denoise"])
        return cls(**data)


def solve_gamma(l: np.ndarray, target: float, max_iter: int = 60, tol: float = 1e-6) -> float:
    """Exponent ``g`` with ``mean(l**g) == target`` found by bisection.

    ``mean(l**g)`` decreases in ``g`` for ``l`` in (0, 1]; when the target is
    out of reach the nearest bracket end is returned.
    """
    lo, hi = 0.0, 1.0
    # grow the bracket until the mean drops below target
    while np.mean(l**hi) > target and hi < 1e6:
        lo, hi = hi, hi * 2.0
    g = 0.5 * (lo + hi)
    for _ in range(max_iter):
        g = 0.5 * (lo + hi)
        m = np.mean(l**g)
        if abs(m - target) <= tol:
            break
        if m > target:
            lo = g
        else:
            hi = g
    return g


def enhance_illuminance(l: np.ndarray, spec: EnhanceSpec) -> np.ndarray:
    if not np.any(l > 0):
        raise ValueError("illuminance is all zero")
    l = np.clip(l, _ILLUM_FLOOR, 1.0)
    g = spec.gamma if spec.mode == "gamma" else solve_gamma(l, spec.target)
    return l**g


def denoise_reflectance(r: np.ndarray, spec: EnhanceSpec) -> np.ndarray:
    """Remove noise from the reflectance.

    In residual form the noise map ``r - smooth(r)`` is estimated and
    subtracted, so other residual estimators can replace the smoother.
    """
    smooth = spec.denoise.apply(r)
    if not spec.residual:
        return smooth
    noise = r - smooth
    return r - noise


def recompose(r: np.ndarray, l: np.ndarray) -> np.ndarray:
    """Retinex product; ``l`` is (H, W) and broadcasts over channels. No clamping."""
    if l.shape != r.shape[:2]:
        raise ValueError(f"illuminance shape {l.shape} does not match image {r.shape}")
    return r * l[:, :, None]


def brighten_luma(x: np.ndarray, target: float = 0.5) -> np.ndarray:
    """Baseline brightening: rescale every pixel by the gain a target-mean
    gamma curve applies to its luma."""
    y = np.clip(luma(x), _ILLUM_FLOOR, 1.0)
    y_enh = enhance_illuminance(y, EnhanceSpec(mode="target_mean", target=target))
    return x * (y_enh / y)[:, :, None]
