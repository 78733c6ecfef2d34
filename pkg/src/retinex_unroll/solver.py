"""Unrolled augmented-Lagrangian solver for joint deblurring and Retinex decomposition.

The model splits the latent sharp image I, reflectance R and illuminance L
into copies Z, P and Q and minimizes

    l1/2 ||H*I - X||^2 + l2/2 ||Z - P.Q||^2 + g_Z(Z) + g_P(P) + g_Q(Q)
    + <Gamma, R-P> + l3/2 ||R-P||^2
    + <Omega, L-Q> + l4/2 ||L-Q||^2
    + <Delta, I-Z> + l5/2 ||I-Z||^2

by a fixed number of blocks, each running the updates P, R, Q, L, Z, I and
then the multipliers. The g terms only exist through the data operators
that are applied to each quadratic minimizer.

Two formula sets are available. The default one solves every sub-problem
exactly. ``paper_literal`` reproduces the printed closed forms, which
differ in sign and in the multiplier used by the I update; it is kept for
side-by-side comparison only.

Images are (H, W, C) arrays; L, Q and Omega are (H, W) and broadcast over
channels.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from .imaging import check_image, check_kernel, forward_fft, inverse_fft, kernel_to_otf, luma
from .priors import DataOperator, OperatorSlots

__all__ = [
    "HyperParams",
    "SolverState",
    "BlockStats",
    "ENERGY_NOTE",
    "init_state",
    "update_P",
    "update_R",
    "update_Q",
    "update_L",
    "update_Z",
    "update_I",
    "update_multipliers",
    "run_block",
    "run",
    "energy",
    "energy_terms",
]

INIT_MODES = ("retinex", "input", "zeros")

ENERGY_NOTE = "augmented Lagrangian without g_P, g_Q, g_Z terms (operators have no closed-form penalty)"


@dataclass(frozen=True)
class HyperParams:
    """Penalty weights and run settings.

    Construction only rejects negative weights so single updates can be
    studied in degenerate limits; :func:`run` requires every weight > 0.

    The defaults are tuned for dark inputs: with illuminance around 0.1 the
    P update weighs the Retinex term by ``lambda2 * Q**2``, so ``lambda3``
    and ``lambda4`` must be far smaller than ``lambda2`` for the
    decomposition to follow the data within a few blocks.
    """

    lambda1: float = 6.0
    lambda2: float = 0.5
    lambda3: float = 5e-4
    lambda4: float = 5e-4
    lambda5: float = 1.0
    eps: float = 1e-6
    blocks: int = 5
    paper_literal: bool = False
    init: str = "retinex"
    illum_floor: float = 1e-2

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "lambda5"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        if not 0 < self.illum_floor <= 1:
            raise ValueError("illum_floor must lie in (0, 1]")

    def check_positive(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "lambda5"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0 for a full solve")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BlockStats:
    block: int
    energy: float
    res_rp: float
    res_lq: float
    res_iz: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverState:
    I: np.ndarray
    R: np.ndarray
    Z: np.ndarray
    P: np.ndarray
    L: np.ndarray
    Q: np.ndarray
    Gamma: np.ndarray
    Omega: np.ndarray
    Delta: np.ndarray
    trace: list = field(default_factory=list)

    def copy(self) -> SolverState:
        arrays = {f.name: getattr(self, f.name).copy() for f in fields(self) if f.name != "trace"}
        return SolverState(**arrays, trace=list(self.trace))

    def residuals(self) -> tuple[float, float, float]:
        """Frobenius norms of R-P, L-Q and I-Z."""
        return (
            float(np.linalg.norm(self.R - self.P)),
            float(np.linalg.norm(self.L - self.Q)),
            float(np.linalg.norm(self.I - self.Z)),
        )

    def check_finite(self) -> None:
        for f in fields(self):
            if f.name != "trace" and not np.all(np.isfinite(getattr(self, f.name))):
                raise FloatingPointError(f"solver variable {f.name} became non-finite")


def init_state(x: np.ndarray, mode: str = "retinex", illum_floor: float = 1e-2) -> SolverState:
    """Starting point of the unrolled solve.

    Multipliers always start at zero. ``zeros`` zero-fills every variable,
    ``input`` sets only I to ``x``. Both leave P = Q = 0, which is a fixed
    point of the P and Q updates, so the default ``retinex`` mode also sets
    Z = I = x, L = Q = luma of x (floored) and R = P = x / L.
    """
    check_image(x)
    h, w, c = x.shape
    zeros_img = np.zeros((h, w, c))
    zeros_map = np.zeros((h, w))
    state = SolverState(
        I=zeros_img.copy(), R=zeros_img.copy(), Z=zeros_img.copy(), P=zeros_img.copy(),
        L=zeros_map.copy(), Q=zeros_map.copy(),
        Gamma=zeros_img.copy(), Omega=zeros_map.copy(), Delta=zeros_img.copy(),
    )
    if mode == "zeros":
        return state
    state.I = np.array(x, dtype=np.float64)
    if mode == "input":
        return state
    if mode != "retinex":
        raise ValueError(f"unknown init mode {mode!r}")
    illum = np.maximum(luma(x), illum_floor)
    state.Z = state.I.copy()
    state.L = illum
    state.Q = illum.copy()
    state.R = x / illum[:, :, None]
    state.P = state.R.copy()
    return state


def _guard(denom: np.ndarray, eps: float) -> np.ndarray:
    # only engages when a denominator collapses toward zero
    return np.maximum(denom, eps)


def update_P(s: SolverState, h: HyperParams, d: DataOperator) -> np.ndarray:
    q = s.Q[:, :, None]
    psi = h.lambda2 * s.Z * q + h.lambda3 * s.R + s.Gamma
    denom = q**2 * h.lambda2 + h.lambda3
    if h.paper_literal:
        return d.apply(s.P - psi / denom)
    return d.apply(psi / _guard(denom, h.eps))


def update_R(s: SolverState, h: HyperParams) -> np.ndarray:
    """Closed-form R step; expects ``s.P`` already updated."""
    if h.paper_literal:
        return (s.P + s.Gamma) / h.lambda3
    return s.P - s.Gamma / h.lambda3


def update_Q(
    s: SolverState, h: HyperParams, d: DataOperator, p_prev: Optional[np.ndarray] = None
) -> np.ndarray:
    """Q step; expects ``s.P`` already updated.

    The single-channel Q is shared by every channel, so the exact minimizer
    sums the per-channel normal equations. ``p_prev`` (P before this block)
    is only read in paper-literal mode, whose printed form uses it.
    """
    if h.paper_literal:
        p_old = s.P if p_prev is None else p_prev
        upsilon = h.lambda2 * s.Z * s.P + (h.lambda4 * s.L + s.Omega)[:, :, None]
        arg = p_old - upsilon / (p_old**2 * h.lambda2 + h.lambda4)
        return d.apply(arg.mean(axis=2))
    num = h.lambda2 * np.sum(s.Z * s.P, axis=2) + h.lambda4 * s.L + s.Omega
    denom = h.lambda2 * np.sum(s.P**2, axis=2) + h.lambda4
    return d.apply(num / _guard(denom, h.eps))


def update_L(s: SolverState, h: HyperParams) -> np.ndarray:
    """Closed-form L step; expects ``s.Q`` already updated."""
    if h.paper_literal:
        return (s.Q + s.Omega) / h.lambda4
    return s.Q - s.Omega / h.lambda4


def update_Z(s: SolverState, h: HyperParams, d: DataOperator) -> np.ndarray:
    denom = h.lambda2 + h.lambda5
    if denom <= 0:
        raise ValueError("lambda2 + lambda5 must be > 0")
    pi = h.lambda2 * s.P * s.Q[:, :, None] + h.lambda5 * s.I + s.Delta
    if h.paper_literal:
        return d.apply(s.Z - pi / denom)
    return d.apply(pi / denom)


def update_I(
    s: SolverState, x: np.ndarray, k: np.ndarray, h: HyperParams, otf: Optional[np.ndarray] = None
) -> np.ndarray:
    """Deconvolution step solved exactly in the Fourier domain.

    Solves ``(l1 H^T H + l5) I = l1 H^T x + l5 Z - Delta`` per channel.
    """
    if h.lambda1 == 0 and h.lambda5 == 0:
        raise ValueError("lambda1 and lambda5 are both zero: the I system is singular")
    if otf is None:
        otf = kernel_to_otf(k, x.shape[0], x.shape[1])
    otf3 = otf[:, :, None]
    if h.paper_literal:
        rhs = h.lambda5 * s.Z - s.Omega[:, :, None]
        denom = h.lambda1 * otf3**2 + h.lambda5
    else:
        rhs = h.lambda5 * s.Z - s.Delta
        denom = h.lambda1 * np.abs(otf3) ** 2 + h.lambda5
    num = h.lambda1 * np.conj(otf3) * forward_fft(x) + forward_fft(rhs)
    return inverse_fft(num / denom)


def update_multipliers(s: SolverState, h: HyperParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gamma = s.Gamma + h.lambda3 * (s.R - s.P)
    omega = s.Omega + h.lambda4 * (s.L - s.Q)
    delta = s.Delta + h.lambda5 * (s.I - s.Z)
    return gamma, omega, delta


def energy_terms(s: SolverState, x: np.ndarray, k: np.ndarray, h: HyperParams) -> dict[str, float]:
    """Each term of the augmented Lagrangian (g terms omitted)."""
    otf = kernel_to_otf(k, x.shape[0], x.shape[1])
    blurred = inverse_fft(forward_fft(s.I) * otf[:, :, None])
    q = s.Q[:, :, None]
    return {
        "data": 0.5 * h.lambda1 * float(np.sum((blurred - x) ** 2)),
        "retinex": 0.5 * h.lambda2 * float(np.sum((s.Z - s.P * q) ** 2)),
        "gamma": float(np.sum(s.Gamma * (s.R - s.P))),
        "penalty_rp": 0.5 * h.lambda3 * float(np.sum((s.R - s.P) ** 2)),
        "omega": float(np.sum(s.Omega * (s.L - s.Q))),
        "penalty_lq": 0.5 * h.lambda4 * float(np.sum((s.L - s.Q) ** 2)),
        "delta": float(np.sum(s.Delta * (s.I - s.Z))),
        "penalty_iz": 0.5 * h.lambda5 * float(np.sum((s.I - s.Z) ** 2)),
    }


def energy(s: SolverState, x: np.ndarray, k: np.ndarray, h: HyperParams) -> float:
    return float(sum(energy_terms(s, x, k, h).values()))


def run_block(
    s: SolverState,
    x: np.ndarray,
    k: np.ndarray,
    h: HyperParams,
    ops: OperatorSlots,
    otf: Optional[np.ndarray] = None,
) -> SolverState:
    """One unrolled block: P, R, Q, L, Z, I, then multipliers. ``s`` is not modified."""
    out = s.copy()
    p_prev = s.P
    out.P = update_P(out, h, ops.reflectance)
    out.R = update_R(out, h)
    out.Q = update_Q(out, h, ops.illuminance, p_prev=p_prev)
    out.L = update_L(out, h)
    out.Z = update_Z(out, h, ops.latent)
    out.I = update_I(out, x, k, h, otf=otf)
    out.Gamma, out.Omega, out.Delta = update_multipliers(out, h)
    out.check_finite()
    res_rp, res_lq, res_iz = out.residuals()
    out.trace.append(
        BlockStats(len(out.trace) + 1, energy(out, x, k, h), res_rp, res_lq, res_iz)
    )
    return out


def run(
    x: np.ndarray,
    k: np.ndarray,
    h: HyperParams = HyperParams(),
    ops: OperatorSlots = OperatorSlots(),
    on_block: Optional[Callable[[int, SolverState], None]] = None,
    state: Optional[SolverState] = None,
) -> SolverState:
    """Run ``h.blocks`` unrolled blocks on the blurry dark image ``x``.

    ``state`` resumes from an earlier result instead of initializing.
    ``on_block(index, state)`` is called after every block (1-based).
    """
    check_image(x)
    check_kernel(k)
    h.check_positive()
    if state is None:
        state = init_state(x, h.init, h.illum_floor)
    otf = kernel_to_otf(k, x.shape[0], x.shape[1])
    for _ in range(h.blocks):
        state = run_block(state, x, k, h, ops, otf=otf)
        if on_block is not None:
            on_block(len(state.trace), state)
    return state
