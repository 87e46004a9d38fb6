"""Attention-style circuit encoder: history matrix -> 9-dim context vector.

Query/key/value summaries of the recent motion (current state, mean of the
past, last-step change) are squashed into (-pi, pi) and injected as rotation
angles on one 9-qubit register; stacked entangling layers then couple
adjacent wires before a Pauli-Z readout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qsim

N_FEATURES = 9
ATTENTION_LAYERS = 6


@dataclass
class EncoderParams:
    """Per-layer phase angles for the entangling blocks: (layers, 8)."""

    layer_phases: np.ndarray

    def __post_init__(self):
        self.layer_phases = np.asarray(self.layer_phases, dtype=float)
        if self.layer_phases.ndim != 2 or self.layer_phases.shape[1] != N_FEATURES - 1:
            raise ValueError(
                f"layer_phases must be (layers, {N_FEATURES - 1}), got {self.layer_phases.shape}"
            )
        if not np.all(np.isfinite(self.layer_phases)):
            raise ValueError("layer_phases contain non-finite values")

    @property
    def size(self) -> int:
        return self.layer_phases.size


def derive_qkv(history: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bounded query/key/value angles from the stacked 11x9 history.

    query = current row, key = mean of the 10 past rows, value = last-step
    change; each then mapped through pi * tanh so every angle lies in
    (-pi, pi).
    """
    history = np.asarray(history, dtype=float)
    if history.shape != (11, N_FEATURES):
        raise ValueError(f"history must be 11x{N_FEATURES}, got {history.shape}")
    query = history[-1]
    key = history[:-1].mean(axis=0)
    value = history[-1] - history[-2]
    squash = lambda vec: np.pi * np.tanh(vec)  # noqa: E731
    return squash(query), squash(key), squash(value)


def attention_state(
    query: np.ndarray, key: np.ndarray, value: np.ndarray, params: EncoderParams
) -> qsim.Statevector:
    """Build the full encoder circuit state, gate by gate."""
    state = qsim.new_zero_state(N_FEATURES)
    for i in range(N_FEATURES):
        qsim.apply_rotation(state, "y", i, query[i])
        qsim.apply_rotation(state, "z", i, key[i])
        qsim.apply_rotation(state, "x", i, value[i])
    for phases in params.layer_phases:
        for i in range(N_FEATURES - 1):
            qsim.apply_cx(state, i, i + 1)
            qsim.apply_rotation(state, "z", i + 1, phases[i])
            qsim.apply_cx(state, i, i + 1)
    return state


def encode_attention(history: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Run the encoder on a history matrix; returns x in [-1, 1]^9.

    The readout has a closed form: every CX-Rz-CX block is diagonal in the
    computational basis (its phase depends only on the XOR of the two wire
    bits), so the entangling stack changes phases but never the basis
    probabilities the Z readout sees.  Tests pin this against the gate-level
    circuit in :func:`attention_state`.
    """
    query, key, value = derive_qkv(history)
    top = np.cos(0.5 * query) * np.exp(-0.5j * key)
    bottom = np.sin(0.5 * query) * np.exp(0.5j * key)
    c, s = np.cos(0.5 * value), np.sin(0.5 * value)
    a = c * top - 1j * s * bottom
    b = -1j * s * top + c * bottom
    return (a.real**2 + a.imag**2) - (b.real**2 + b.imag**2)
