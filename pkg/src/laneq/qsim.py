"""Dense statevector simulator for small qubit counts.

Just the gate set the forecasting circuits need: single-qubit rotations,
adjacent-or-not CX, a global phase layer, Pauli-Z expectations and raw
amplitude readout.  States are explicit 2**n complex vectors; gates are
applied in place with stride arithmetic (no gate matrices on the main path).

Conventions, fixed for the whole package:
  * rotations use the half-angle form R_a(t) = exp(-i * t * a / 2)
  * qubit i is bit i of the basis index, i.e. qubit 0 is the least
    significant bit, so basis index j = sum_i b_i * 2**i
"""

from __future__ import annotations

from functools import lru_cache
from math import cos, sin

import numpy as np

MAX_QUBITS = 12


class Statevector:
    """Pure n-qubit state as a dense complex amplitude vector.

    Single-owner mutable: gates modify ``amps`` in place. Distinct instances
    are safe to use from distinct threads.
    """

    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits: int, amps: np.ndarray):
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
        amps = np.asarray(amps, dtype=np.complex128)
        if amps.shape != (2**n_qubits,):
            raise ValueError(f"expected {2**n_qubits} amplitudes, got shape {amps.shape}")
        self.n_qubits = n_qubits
        self.amps = amps

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amps.copy())

    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amps, self.amps)))


def new_zero_state(n: int) -> Statevector:
    """|0...0> on n qubits (1 <= n <= 12)."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in 1..{MAX_QUBITS}, got {n}")
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(n, amps)


def _check_qubit(state: Statevector, qubit: int) -> None:
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {state.n_qubits} qubits")


def apply_rotation(state: Statevector, axis: str, qubit: int, angle: float) -> Statevector:
    """Apply R_x/R_y/R_z(angle) on one wire, in place. Returns the state."""
    _check_qubit(state, qubit)
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle}")
    half = 0.5 * angle
    c, s = cos(half), sin(half)
    # view exposing the target bit on axis 1: index j = (high, bit, low)
    v = state.amps.reshape(-1, 2, 2**qubit)
    if axis == "z":
        v[:, 0, :] *= complex(c, -s)
        v[:, 1, :] *= complex(c, s)
    elif axis == "y":
        a0 = v[:, 0, :].copy()
        v[:, 0, :] *= c
        v[:, 0, :] -= s * v[:, 1, :]
        v[:, 1, :] *= c
        v[:, 1, :] += s * a0
    elif axis == "x":
        js = complex(0.0, -s)
        a0 = v[:, 0, :].copy()
        v[:, 0, :] *= c
        v[:, 0, :] += js * v[:, 1, :]
        v[:, 1, :] *= c
        v[:, 1, :] += js * a0
    else:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    return state


def apply_cx(state: Statevector, control: int, target: int) -> Statevector:
    """Controlled-NOT: flip the target bit where the control bit is 1."""
    _check_qubit(state, control)
    _check_qubit(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    hi, lo = max(control, target), min(control, target)
    # index j = (top, bit_hi, mid, bit_lo, bottom)
    v = state.amps.reshape(-1, 2, 2 ** (hi - lo - 1) if hi - lo > 1 else 1, 2, 2**lo)
    if control > target:
        a = v[:, 1, :, 0, :].copy()
        v[:, 1, :, 0, :] = v[:, 1, :, 1, :]
        v[:, 1, :, 1, :] = a
    else:
        a = v[:, 0, :, 1, :].copy()
        v[:, 0, :, 1, :] = v[:, 1, :, 1, :]
        v[:, 1, :, 1, :] = a
    return state


def expect_z(state: Statevector, qubit: int) -> float:
    """<Z_qubit> = 1 - 2 * P(bit = 1), always in [-1, 1]."""
    _check_qubit(state, qubit)
    v = state.amps.reshape(-1, 2, 2**qubit)[:, 1, :]
    p1 = float(np.sum(v.real**2 + v.imag**2))
    return 1.0 - 2.0 * p1


@lru_cache(maxsize=None)
def _popcounts(n: int) -> np.ndarray:
    j = np.arange(2**n, dtype=np.uint32)
    counts = np.zeros(2**n, dtype=np.int64)
    for bit in range(n):
        counts += (j >> bit) & 1
    return counts


def apply_phase_layer(state: Statevector, angle: float) -> Statevector:
    """R_z(angle) on every qubit at once.

    Multiplies |j> by exp(i * angle * (2*popcount(j) - n) / 2); basis
    probabilities are untouched.
    """
    n = state.n_qubits
    exponent = 0.5 * angle * (2 * _popcounts(n) - n)
    state.amps *= np.exp(1j * exponent)
    return state


def amplitudes(state: Statevector) -> np.ndarray:
    """Copy of the amplitude vector in computational-basis order."""
    return state.amps.copy()
