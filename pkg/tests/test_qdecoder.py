import numpy as np
import pytest

from laneq import qdecoder, qsim
from laneq.qdecoder import (
    DecoderParams,
    ModeSet,
    confidence_order,
    decode,
    decode_residuals,
    decoder_state,
    fourier_residual,
    mode_confidences,
    mode_phase,
)

from oracles import apply_ops_via_matrices, decoder_ops


def random_inputs(seed, scale=0.8):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1, 1, size=9)
    params = DecoderParams(rng.normal(0.0, scale, size=9))
    return z, params


def test_mode_phases():
    assert mode_phase(1) == pytest.approx(np.pi / 8)
    assert mode_phase(16) == pytest.approx(17 * np.pi / 16)


def test_zero_latent_zero_params_returns_baseline_exactly():
    baseline = np.cumsum(np.ones((20, 2)) * 0.1, axis=0)
    modes = decode(np.zeros(9), baseline, DecoderParams(np.zeros(9)))
    np.testing.assert_array_equal(modes.residuals, np.zeros((16, 20, 2)))
    np.testing.assert_array_equal(modes.trajectories, np.tile(baseline, (16, 1, 1)))
    np.testing.assert_allclose(modes.confidences, np.full(16, 1 / 16), atol=1e-15)


def test_single_coefficient_synthesis():
    coeffs = np.zeros(8, dtype=complex)
    coeffs[0] = 1.0
    residual = fourier_residual(coeffs)
    t = np.arange(1, 21)
    np.testing.assert_allclose(residual[:, 0], 1.5 * np.cos(np.pi * t / 21), atol=1e-15)
    np.testing.assert_array_equal(residual[:, 1], np.zeros(20))


def test_base_state_matches_matrix_oracle():
    z, params = random_inputs(5)
    state = decoder_state(z, params)
    start = np.zeros(512, dtype=complex)
    start[0] = 1.0
    oracle = apply_ops_via_matrices(9, decoder_ops(z, params.angles), start)
    np.testing.assert_allclose(state.amps, oracle, atol=1e-10)


def test_mode_probabilities_invariant_and_residuals_differ():
    z, params = random_inputs(7)
    base = decoder_state(z, params)
    base_probs = np.abs(base.amps) ** 2
    for mode in range(1, 17):
        shifted = qsim.apply_phase_layer(base.copy(), mode_phase(mode))
        np.testing.assert_allclose(np.abs(shifted.amps) ** 2, base_probs, atol=1e-12)
    residuals = decode_residuals(z, params)
    spread = np.ptp(residuals, axis=0).max()
    assert spread > 1e-3  # phase offsets must actually diversify the modes


def test_residuals_recompute_from_extracted_amplitudes():
    z, params = random_inputs(9)
    residuals, amplitudes = decode_residuals(z, params, return_amplitudes=True)
    base = decoder_state(z, params)
    for mode in range(1, 17):
        shifted = qsim.apply_phase_layer(base.copy(), mode_phase(mode))
        coeffs = qsim.amplitudes(shifted)[1:9]
        np.testing.assert_allclose(amplitudes[mode - 1], coeffs, atol=1e-12)
        # independent synthesis with plain loops
        for t in range(1, 21):
            dx = sum(coeffs[j - 1].real * np.cos(j * np.pi * t / 21) for j in range(1, 9))
            dy = sum(coeffs[j - 1].imag * np.sin(j * np.pi * t / 21) for j in range(1, 9))
            np.testing.assert_allclose(
                residuals[mode - 1, t - 1], [1.5 * dx, 1.5 * dy], atol=1e-12
            )


def test_single_pass_builds_base_state_once(monkeypatch):
    calls = []
    original = qdecoder.decoder_state

    def counting(z, params):
        calls.append(1)
        return original(z, params)

    monkeypatch.setattr(qdecoder, "decoder_state", counting)
    z, params = random_inputs(13)
    decode(z, np.zeros((20, 2)), params)
    assert len(calls) == 1


def test_residual_curvature_bound():
    z, params = random_inputs(15)
    residuals, amplitudes = decode_residuals(z, params, return_amplitudes=True)
    j = np.arange(1, 9)
    for mode in range(16):
        bound = 1.5 * np.sum(np.abs(amplitudes[mode]) * (j * np.pi / 21) ** 2)
        second_diff = residuals[mode, 2:] - 2 * residuals[mode, 1:-1] + residuals[mode, :-2]
        assert np.abs(second_diff).max() <= bound + 1e-12


def test_residual_hard_bound():
    z, params = random_inputs(21, scale=2.0)
    residuals = decode_residuals(z, params)
    assert np.abs(residuals).max() <= 1.5 * 8


def test_trajectories_are_baseline_plus_residuals():
    z, params = random_inputs(27)
    rng = np.random.default_rng(0)
    baseline = rng.normal(size=(20, 2))
    modes = decode(z, baseline, params)
    np.testing.assert_array_equal(
        modes.trajectories, baseline[None, :, :] + modes.residuals
    )
    modes.validate()


class TestConfidences:
    def test_zero_latent_uniform_fallback(self):
        np.testing.assert_array_equal(mode_confidences(np.zeros(9)), np.full(16, 1 / 16))

    def test_impulse_latent_is_flat(self):
        z = np.zeros(9)
        z[0] = 1.0
        np.testing.assert_allclose(mode_confidences(z), np.full(16, 1 / 16), atol=1e-12)

    def test_all_ones_matches_direct_dft_sum(self):
        z = np.ones(9)
        confidences = mode_confidences(z)
        # independent DFT: bin m-1 sums exp(-2i pi (m-1) n / 16) over n=0..8
        raw = np.zeros(16)
        for m in range(16):
            raw[m] = abs(sum(np.exp(-2j * np.pi * m * n / 16) for n in range(9)))
        np.testing.assert_allclose(confidences, raw / raw.sum(), atol=1e-12)
        assert raw[0] == pytest.approx(9.0)

    def test_simplex(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            conf = mode_confidences(rng.uniform(-1, 1, size=9))
            assert conf.sum() == pytest.approx(1.0, abs=1e-9)
            assert np.all(conf >= 0)

    def test_rejects_too_small_padding(self):
        with pytest.raises(ValueError):
            mode_confidences(np.ones(9), n_modes=8)


def test_confidence_order_breaks_ties_by_lower_index():
    order = confidence_order(np.array([0.2, 0.5, 0.2, 0.1]))
    assert order.tolist() == [1, 0, 2, 3]


def test_modeset_validation():
    bad = ModeSet(
        residuals=np.zeros((2, 3, 2)),
        trajectories=np.zeros((2, 3, 2)),
        confidences=np.array([0.7, 0.7]),
    )
    with pytest.raises(ValueError):
        bad.validate()


def test_decode_argument_checks():
    z, params = random_inputs(1)
    with pytest.raises(ValueError):
        decode_residuals(z, params, n_modes=0)
    with pytest.raises(ValueError):
        decode_residuals(z, params, n_coeffs=512)
    with pytest.raises(ValueError):
        DecoderParams(np.zeros(8))
