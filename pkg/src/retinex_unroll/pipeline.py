"""End-to-end restoration: unrolled solve followed by the enhancement stage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .enhancement import EnhanceSpec, denoise_reflectance, enhance_illuminance, recompose
from .priors import OperatorSlots
from .solver import HyperParams, SolverState, run

__all__ = ["Restoration", "restore"]


@dataclass
class Restoration:
    image: np.ndarray
    state: SolverState
    illuminance: np.ndarray
    reflectance: np.ndarray


def restore(
    x: np.ndarray,
    k: np.ndarray,
    hyper: HyperParams = HyperParams(),
    ops: OperatorSlots = OperatorSlots(),
    enhance: EnhanceSpec = EnhanceSpec(),
    on_block: Optional[Callable[[int, SolverState], None]] = None,
) -> Restoration:
    """Deblur and decompose ``x``, brighten L, denoise R and recombine.

    The returned image is not clamped; clamping happens at export.
    """
    state = run(x, k, hyper, ops, on_block=on_block)
    illum = enhance_illuminance(state.L, enhance)
    refl = denoise_reflectance(state.R, enhance)
    return Restoration(recompose(refl, illum), state, illum, refl)
