"""Parameter layout and the end-to-end forward pass.

All trainable angles live in one flat vector so the gradient-free optimizer
can perturb them together.  Layout: encoder phases first, then the
feedforward z/y angle blocks, then the decoder angles.  With the default
architecture that is 48 + 1152 + 9 = 1209 values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import ATTENTION_LAYERS, N_FEATURES, EncoderParams, encode_attention
from .qdecoder import (
    N_COEFFS,
    N_MODES,
    RESIDUAL_SCALE,
    DecoderParams,
    ModeSet,
    decode,
)
from .qffn import FFN_LAYERS, FfnParams, ffn_forward
from .scenario import HORIZON_STEPS, Example


@dataclass(frozen=True)
class Architecture:
    """Shape constants for the three circuits; defaults match the reference setup."""

    n_wires: int = N_FEATURES
    attention_layers: int = ATTENTION_LAYERS
    ffn_layers: int = FFN_LAYERS
    n_modes: int = N_MODES
    n_coeffs: int = N_COEFFS
    residual_scale: float = RESIDUAL_SCALE
    horizon: int = HORIZON_STEPS

    @property
    def encoder_size(self) -> int:
        return self.attention_layers * (self.n_wires - 1)

    @property
    def ffn_size(self) -> int:
        return 2 * self.ffn_layers * self.n_wires

    @property
    def decoder_size(self) -> int:
        return self.n_wires

    @property
    def param_count(self) -> int:
        return self.encoder_size + self.ffn_size + self.decoder_size


DEFAULT_ARCH = Architecture()


def check_param_vector(theta: np.ndarray, arch: Architecture = DEFAULT_ARCH) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (arch.param_count,):
        raise ValueError(
            f"parameter vector must have length {arch.param_count}, got shape {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector contains non-finite values")
    return theta


def split_params(
    theta: np.ndarray, arch: Architecture = DEFAULT_ARCH
) -> tuple[EncoderParams, FfnParams, DecoderParams]:
    """Partition the flat vector into the three circuit parameter sets."""
    theta = check_param_vector(theta, arch)
    enc_end = arch.encoder_size
    ffn_end = enc_end + arch.ffn_size
    encoder = EncoderParams(
        theta[:enc_end].reshape(arch.attention_layers, arch.n_wires - 1)
    )
    half = arch.ffn_size // 2
    ffn = FfnParams(
        rz_angles=theta[enc_end : enc_end + half].reshape(arch.ffn_layers, arch.n_wires),
        ry_angles=theta[enc_end + half : ffn_end].reshape(arch.ffn_layers, arch.n_wires),
    )
    decoder = DecoderParams(theta[ffn_end:])
    return encoder, ffn, decoder


def init_params(
    rng: np.random.Generator, std: float = 0.05, arch: Architecture = DEFAULT_ARCH
) -> np.ndarray:
    """Small random angles, N(0, std^2)."""
    return rng.normal(0.0, std, size=arch.param_count)


def forward(example: Example, theta: np.ndarray, arch: Architecture = DEFAULT_ARCH) -> ModeSet:
    """Full pipeline: history -> context -> latent -> multi-modal trajectories."""
    encoder, ffn, decoder = split_params(theta, arch)
    context = encode_attention(example.history, encoder)
    latent = ffn_forward(context, ffn)
    return decode(
        latent,
        example.baseline,
        decoder,
        n_modes=arch.n_modes,
        n_coeffs=arch.n_coeffs,
        residual_scale=arch.residual_scale,
    )
