"""Deep measure-and-reencode refinement stack on the 9-qubit register.

Each layer is a fresh circuit: the previous layer's Z-expectations become
rotation angles, two trainable single-qubit rotations follow, a fixed CX
ring mixes the wires, and the register is read out again.  64 layers deep,
finished with an elementwise tanh.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import qsim

N_WIRES = 9
FFN_LAYERS = 64


@dataclass
class FfnParams:
    """Trainable z/y rotation angles per layer and wire: both (layers, 9)."""

    rz_angles: np.ndarray
    ry_angles: np.ndarray

    def __post_init__(self):
        self.rz_angles = np.asarray(self.rz_angles, dtype=float)
        self.ry_angles = np.asarray(self.ry_angles, dtype=float)
        for name, angles in (("rz_angles", self.rz_angles), ("ry_angles", self.ry_angles)):
            if angles.ndim != 2 or angles.shape[1] != N_WIRES:
                raise ValueError(f"{name} must be (layers, {N_WIRES}), got {angles.shape}")
            if not np.all(np.isfinite(angles)):
                raise ValueError(f"{name} contain non-finite values")
        if self.rz_angles.shape != self.ry_angles.shape:
            raise ValueError("rz_angles and ry_angles must have matching shapes")

    @property
    def layers(self) -> int:
        return self.rz_angles.shape[0]

    @property
    def size(self) -> int:
        return self.rz_angles.size + self.ry_angles.size


def ffn_layer_state(
    x_prev: np.ndarray, rz: np.ndarray, ry: np.ndarray, ring: bool = True
) -> qsim.Statevector:
    """One layer's pre-measurement state; ``ring=False`` skips the CX cycle (test hook)."""
    state = qsim.new_zero_state(N_WIRES)
    for i in range(N_WIRES):
        qsim.apply_rotation(state, "y", i, x_prev[i])
        qsim.apply_rotation(state, "z", i, rz[i])
        qsim.apply_rotation(state, "y", i, ry[i])
    if ring:
        for i in range(N_WIRES - 1):
            qsim.apply_cx(state, i, i + 1)
        qsim.apply_cx(state, N_WIRES - 1, 0)
    return state


@lru_cache(maxsize=None)
def _ring_readout_matrix(n: int) -> np.ndarray:
    """Map product-state basis probabilities straight to post-ring <Z_i>.

    The CX ring only permutes computational basis states, so the layer
    readout is W @ probs with W[i, j] = 1 - 2 * bit_i(ring(j)).
    """
    dest = np.arange(2**n, dtype=np.int64)
    pairs = [(i, i + 1) for i in range(n - 1)] + [(n - 1, 0)]
    for control, target in pairs:
        dest = dest ^ (((dest >> control) & 1) << target)
    bits = np.array([(dest >> i) & 1 for i in range(n)], dtype=float)
    return 1.0 - 2.0 * bits


def _qubit_probs(x_prev: np.ndarray, rz: np.ndarray, ry: np.ndarray) -> np.ndarray:
    """Per-wire (P0, P1) of Ry(ry) Rz(rz) Ry(x) |0>, vectorized over wires."""
    a = np.cos(0.5 * x_prev) * np.exp(-0.5j * rz)
    b = np.sin(0.5 * x_prev) * np.exp(0.5j * rz)
    c, s = np.cos(0.5 * ry), np.sin(0.5 * ry)
    top = c * a - s * b
    bottom = s * a + c * b
    return np.stack(
        [top.real**2 + top.imag**2, bottom.real**2 + bottom.imag**2], axis=1
    )


def ffn_layer(x_prev: np.ndarray, rz: np.ndarray, ry: np.ndarray, ring: bool = True) -> np.ndarray:
    """One layer's Z readout.

    The pre-ring state is a product state and the ring is a basis
    permutation, so expectations come from per-wire probabilities without
    materializing amplitudes; tests pin this against the gate-level circuit.
    """
    probs = _qubit_probs(np.asarray(x_prev, float), np.asarray(rz, float), np.asarray(ry, float))
    if not ring:
        return probs[:, 0] - probs[:, 1]
    joint = probs[N_WIRES - 1]  # wire 0 = least significant bit
    for i in range(N_WIRES - 2, -1, -1):
        joint = (joint[:, None] * probs[i]).ravel()
    return _ring_readout_matrix(N_WIRES) @ joint


def ffn_forward(x0: np.ndarray, params: FfnParams) -> np.ndarray:
    """Chain all layers and squash the final readout into (-1, 1)^9."""
    x = np.asarray(x0, dtype=float)
    if x.shape != (N_WIRES,):
        raise ValueError(f"input must have shape ({N_WIRES},), got {x.shape}")
    for rz, ry in zip(params.rz_angles, params.ry_angles):
        x = ffn_layer(x, rz, ry)
    return np.tanh(x)
