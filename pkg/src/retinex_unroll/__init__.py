"""Low-light deblurring by an unrolled augmented-Lagrangian Retinex solver."""

from .degradation import DegradeSpec, degrade, make_kernel, synthetic_scene
from .enhancement import EnhanceSpec
from .metrics import ScoreReport, psnr, score, ssim
from .pipeline import Restoration, restore
from .priors import DataOperator, OperatorSlots
from .solver import HyperParams, SolverState, run

__version__ = "0.1.0"

__all__ = [
    "DataOperator",
    "DegradeSpec",
    "EnhanceSpec",
    "HyperParams",
    "OperatorSlots",
    "Restoration",
    "ScoreReport",
    "SolverState",
    "degrade",
    "make_kernel",
    "psnr",
    "restore",
    "run",
    "score",
    "ssim",
    "synthetic_scene",
]
