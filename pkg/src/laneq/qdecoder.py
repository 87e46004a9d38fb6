"""Single-pass multi-modal decoder: latent vector -> 16 residual trajectories.

One ladder-entangled circuit spreads the latent across the 512 basis
amplitudes.  Each mode applies a different global phase layer to a copy of
that state and reads the first few non-zero-index amplitudes as truncated
Fourier coefficients: real parts weight cosines, imaginary parts weight
sines, so residuals are smooth by construction.  Mode confidences come from
the magnitude spectrum of the zero-padded latent, not from a learned head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim
from .scenario import HORIZON_STEPS

N_WIRES = 9
N_MODES = 16
N_COEFFS = 8
RESIDUAL_SCALE = 1.5


@dataclass
class DecoderParams:
    """Nine angles; the first eight are shared between the per-qubit R_z and
    the ladder R_y couplings, the ninth appears only in the per-qubit R_z."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.shape != (N_WIRES,):
            raise ValueError(f"angles must have shape ({N_WIRES},), got {self.angles.shape}")
        if not np.all(np.isfinite(self.angles)):
            raise ValueError("angles contain non-finite values")

    @property
    def size(self) -> int:
        return self.angles.size


@dataclass
class ModeSet:
    """All mode hypotheses for one example, in mode order (not ranked)."""

    residuals: np.ndarray  # (M, T, 2) lane-frame normalized residuals
    trajectories: np.ndarray  # (M, T, 2) baseline + residuals
    confidences: np.ndarray  # (M,) probabilities summing to 1

    def validate(self) -> None:
        if abs(self.confidences.sum() - 1.0) > 1e-9 or np.any(self.confidences < 0):
            raise ValueError("confidences must form a probability distribution")


def mode_phase(mode: int, n_modes: int = N_MODES) -> float:
    """Global phase offset for 1-based mode index: (m + 1) * pi / M."""
    return (mode + 1) * np.pi / n_modes


def decoder_state(z: np.ndarray, params: DecoderParams) -> qsim.Statevector:
    """Latent-conditioned base state shared by all modes."""
    z = np.asarray(z, dtype=float)
    if z.shape != (N_WIRES,):
        raise ValueError(f"latent must have shape ({N_WIRES},), got {z.shape}")
    angles = params.angles
    state = qsim.new_zero_state(N_WIRES)
    for i in range(N_WIRES):
        qsim.apply_rotation(state, "y", i, z[i])
        qsim.apply_rotation(state, "z", i, angles[i])
    for i in range(N_WIRES - 1):
        qsim.apply_cx(state, i, i + 1)
        qsim.apply_rotation(state, "y", i + 1, angles[i])
        qsim.apply_cx(state, i, i + 1)
    return state


def fourier_residual(
    coeffs: np.ndarray, horizon: int = HORIZON_STEPS, residual_scale: float = RESIDUAL_SCALE
) -> np.ndarray:
    """Truncated Fourier synthesis from B complex coefficients to (T, 2).

    coeffs[j-1] weights cos(j*pi*t/(T+1)) with its real part (x residual)
    and sin(j*pi*t/(T+1)) with its imaginary part (y residual), t = 1..T.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    j = np.arange(1, coeffs.size + 1)
    t = np.arange(1, horizon + 1)
    angles = np.pi * np.outer(t, j) / (horizon + 1)  # (T, B)
    dx = np.cos(angles) @ coeffs.real
    dy = np.sin(angles) @ coeffs.imag
    return residual_scale * np.column_stack([dx, dy])


def decode_residuals(
    z: np.ndarray,
    params: DecoderParams,
    n_modes: int = N_MODES,
    n_coeffs: int = N_COEFFS,
    residual_scale: float = RESIDUAL_SCALE,
    horizon: int = HORIZON_STEPS,
    return_amplitudes: bool = False,
):
    """All mode residuals from one base-state construction.

    The base circuit runs once; each mode only re-phases a copy of the state
    and reads amplitudes 1..B (basis-index order, skipping the all-zeros
    state).
    """
    if n_coeffs > 2**N_WIRES - 1:
        raise ValueError(f"n_coeffs must leave the zero index out, got {n_coeffs}")
    if n_modes < 1:
        raise ValueError(f"need at least one mode, got {n_modes}")
    base = decoder_state(z, params)
    base_coeffs = base.amps[1 : n_coeffs + 1]
    # phase layer restricted to the coefficient indices: same popcount phase
    # the full-state qsim.apply_phase_layer would put on |1>..|B>
    popcount = np.array([bin(j).count("1") for j in range(1, n_coeffs + 1)])
    offsets = np.array([mode_phase(m, n_modes) for m in range(1, n_modes + 1)])
    factors = np.exp(0.5j * np.outer(offsets, 2 * popcount - N_WIRES))
    amplitudes = factors * base_coeffs

    t = np.arange(1, horizon + 1)
    j = np.arange(1, n_coeffs + 1)
    angles = np.pi * np.outer(t, j) / (horizon + 1)  # (T, B)
    residuals = residual_scale * np.stack(
        [amplitudes.real @ np.cos(angles).T, amplitudes.imag @ np.sin(angles).T], axis=2
    )
    # |alpha_j| <= 1 caps every residual component at residual_scale * B
    assert float(np.abs(residuals).max(initial=0.0)) <= residual_scale * n_coeffs + 1e-9
    if return_amplitudes:
        return residuals, amplitudes
    return residuals


def mode_confidences(z: np.ndarray, n_modes: int = N_MODES) -> np.ndarray:
    """Confidence distribution from the latent's magnitude spectrum.

    The latent is zero-padded to ``n_modes`` and run through a forward DFT;
    mode m takes the magnitude of bin m-1 (the DC bin belongs to mode 1).
    An exactly-zero spectrum falls back to the uniform distribution.
    """
    z = np.asarray(z, dtype=float)
    if n_modes < z.size:
        raise ValueError(f"cannot pad a length-{z.size} latent to {n_modes} bins")
    padded = np.zeros(n_modes)
    padded[: z.size] = z
    magnitudes = np.abs(np.fft.fft(padded))
    total = magnitudes.sum()
    if total == 0.0:
        return np.full(n_modes, 1.0 / n_modes)
    return magnitudes / total


def decode(
    z: np.ndarray,
    baseline: np.ndarray,
    params: DecoderParams,
    n_modes: int = N_MODES,
    n_coeffs: int = N_COEFFS,
    residual_scale: float = RESIDUAL_SCALE,
) -> ModeSet:
    """Full decode: residuals, absolute trajectories, and confidences."""
    baseline = np.asarray(baseline, dtype=float)
    residuals = decode_residuals(
        z, params, n_modes, n_coeffs, residual_scale, horizon=baseline.shape[0]
    )
    return ModeSet(
        residuals=residuals,
        trajectories=baseline[None, :, :] + residuals,
        confidences=mode_confidences(z, n_modes),
    )


def confidence_order(confidences: np.ndarray) -> np.ndarray:
    """Mode indices sorted by descending confidence, ties to the lower index."""
    order = np.lexsort((np.arange(len(confidences)), -np.asarray(confidences)))
    return order
