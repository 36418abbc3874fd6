"""
AWGN calibration, tapped-delay-line fading and ZF equalization
"""
import logging

import numpy as np
import pytest
from scipy.special import j0

from fqamfbmc.channel import (
    AwgnSpec,
    TdlSpec,
    apply_awgn,
    apply_tdl,
    awgn_noise_variance,
    doppler_hz,
    eva_spec,
    identity_realization,
    profile_table,
    signal_power,
    tap_gains,
    zf_equalize,
)
from fqamfbmc.exceptions import DimensionError, FqamFbmcError
from fqamfbmc.models import ChannelRealization, TimeSignal

pytestmark = pytest.mark.unit


def white_signal(rng, num_symbols, num_subcarriers=100, overlap=4):
    size = (num_symbols - 1) * num_subcarriers + overlap * num_subcarriers
    samples = (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)
    return TimeSignal(samples=samples, num_subcarriers=num_subcarriers, overlap=overlap, num_symbols=num_symbols)


def test_doppler_at_lte_point():
    assert doppler_hz(50.0, 2.0e9) == pytest.approx(50 / 3.6 * 2.0e9 / 2.998e8)
    assert doppler_hz(0.0) == 0.0


def test_noise_variance_formula():
    """Each group carries R bits per M_F subcarriers, so Eb = P * M_F / R"""
    assert awgn_noise_variance(1.0, 10.0, 3.5, 4) == pytest.approx(4 / 35)
    assert awgn_noise_variance(2.0, 0.0, 2.0, 1) == pytest.approx(1.0)
    with pytest.raises(FqamFbmcError):
        awgn_noise_variance(0.0, 10.0, 3.5, 4)


def test_awgn_measured_variance(rng):
    signal = white_signal(rng, 9997)
    spec = AwgnSpec(ebn0_db=6.0, bits_per_group=3.5, mf=4)
    noisy = apply_awgn(signal, spec, rng)
    noise = np.asarray(noisy.samples) - np.asarray(signal.samples)
    expected = spec.noise_variance(signal_power(signal))
    assert 10 * np.log10(np.mean(np.abs(noise) ** 2) / expected) == pytest.approx(0.0, abs=0.05)
    # circular: real and imaginary parts carry half each
    assert np.var(noise.real) == pytest.approx(expected / 2, rel=0.02)


def test_awgn_reference_power(rng):
    signal = white_signal(rng, 100)
    spec = AwgnSpec(ebn0_db=0.0, bits_per_group=2.0, mf=2)
    noisy = apply_awgn(signal, spec, rng, reference_power=100.0)
    noise = np.asarray(noisy.samples) - np.asarray(signal.samples)
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(100.0, rel=0.1)


def test_awgn_is_reproducible(rng):
    signal = white_signal(rng, 20)
    spec = AwgnSpec(ebn0_db=3.0, bits_per_group=2.0)
    a = apply_awgn(signal, spec, np.random.default_rng(5))
    b = apply_awgn(signal, spec, np.random.default_rng(5))
    np.testing.assert_array_equal(a.samples, b.samples)


def test_signal_power_uses_symbol_slots():
    signal = TimeSignal(samples=np.ones(3 * 8 + 32), num_subcarriers=8, overlap=4, num_symbols=4)
    assert signal_power(signal) == pytest.approx((3 * 8 + 32) / 32)


def test_eva_profile():
    spec = eva_spec(50.0, 2.0e9, 1.5e6)
    assert spec.doppler_hz == pytest.approx(doppler_hz(50.0, 2.0e9))
    assert spec.tap_powers.sum() == pytest.approx(1.0)
    assert list(spec.delay_samples) == [0, 0, 0, 0, 1, 1, 2, 3, 4]
    assert len(profile_table(spec)) == 9


def test_tdl_rejects_inconsistent_profile():
    with pytest.raises(ValueError):
        TdlSpec(delays_ns=(0, 10), powers_db=(0.0,), sample_rate_hz=1e6)
    with pytest.raises(ValueError):
        TdlSpec(delays_ns=(-5,), powers_db=(0.0,), sample_rate_hz=1e6)


def test_static_taps(rng):
    spec = eva_spec(50.0, 2.0e9, 1.5e6, fading=False)
    gains = tap_gains(spec, rng, np.arange(10) / 1.5e6)
    np.testing.assert_allclose(gains, np.sqrt(spec.tap_powers)[:, None] * np.ones((1, 10)))


def test_fading_autocorrelation_follows_bessel(rng):
    """Sum-of-sinusoids taps average to J0(2 pi f_D tau)"""
    spec = TdlSpec(delays_ns=(0,), powers_db=(0.0,), doppler_hz=100.0, sample_rate_hz=1e4, num_sinusoids=32)
    lags = np.linspace(0, 0.01, 11)
    acc = np.zeros(lags.size, dtype=np.complex128)
    for _ in range(5000):
        g = tap_gains(spec, rng, lags)[0]
        acc += g[0] * np.conj(g)
    acc /= 5000
    np.testing.assert_allclose(acc.real, j0(2 * np.pi * 100.0 * lags), atol=0.05)


def test_fading_tap_powers(rng):
    spec = eva_spec(50.0, 2.0e9, 1.5e6)
    power = np.zeros(9)
    for _ in range(10_000):
        power += np.abs(tap_gains(spec, rng, np.zeros(1))[:, 0]) ** 2
    power /= 10_000
    np.testing.assert_allclose(10 * np.log10(power / spec.tap_powers), 0.0, atol=0.2)


def test_static_eva_preserves_power(rng):
    signal = white_signal(rng, 9997)
    # 10 ns resolution keeps every EVA tap on its own delay
    faded, realization = apply_tdl(signal, eva_spec(50.0, 2.0e9, 1e8, fading=False), rng)
    assert faded.samples.size == signal.samples.size
    ratio = np.mean(np.abs(faded.samples) ** 2) / np.mean(np.abs(signal.samples) ** 2)
    assert ratio == pytest.approx(1.0, rel=0.01)
    response = np.asarray(realization.response)
    assert response.shape == (9997, 100)
    np.testing.assert_allclose(response, response[:1], atol=1e-12)


@pytest.mark.slow
def test_fading_eva_preserves_power():
    """Mean output power over many fading realizations matches the input"""
    # a fast Doppler averages every realization over thousands of fades
    spec = eva_spec(200_000.0, 2.0e9, 1.5e6)
    ratios = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        signal = white_signal(rng, 500)
        faded, _ = apply_tdl(signal, spec, rng)
        ratios.append(np.mean(np.abs(faded.samples) ** 2) / np.mean(np.abs(signal.samples) ** 2))
    assert np.mean(ratios) == pytest.approx(1.0, rel=0.01)


def test_single_tap_is_transparent(rng):
    signal = white_signal(rng, 10)
    spec = TdlSpec(delays_ns=(0,), powers_db=(0.0,), sample_rate_hz=1.5e6, fading=False)
    faded, realization = apply_tdl(signal, spec, rng)
    np.testing.assert_allclose(faded.samples, signal.samples)
    np.testing.assert_allclose(realization.response, 1.0)


def test_frozen_doppler_gives_constant_response(rng):
    signal = white_signal(rng, 30)
    spec = eva_spec(0.0, 2.0e9, 1.5e6)
    _, realization = apply_tdl(signal, spec, rng)
    response = np.asarray(realization.response)
    np.testing.assert_allclose(response, response[:1], atol=1e-9)


def test_tdl_rejects_long_delay(rng):
    signal = white_signal(rng, 5, num_subcarriers=16)
    spec = TdlSpec(delays_ns=(0, 1e6), powers_db=(0.0, -3.0), sample_rate_hz=2.4e5)
    with pytest.raises(FqamFbmcError):
        apply_tdl(signal, spec, rng)


def test_zf_identity(rng):
    grid = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
    result = zf_equalize(grid, identity_realization(3, 8))
    np.testing.assert_allclose(result.grid, grid)
    assert result.floored == 0


def test_zf_inverts_flat_response(rng):
    grid = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
    h = 0.5 * np.exp(1j * 0.7) * np.ones((3, 8))
    result = zf_equalize(grid * h, ChannelRealization(response=h))
    np.testing.assert_allclose(result.grid, grid, atol=1e-12)


def test_zf_floor(caplog):
    response = np.ones((2, 4), dtype=np.complex128)
    response[0, 1] = 0.0
    response[1, 2] = 1e-9j
    with caplog.at_level(logging.WARNING):
        result = zf_equalize(np.ones((2, 4)), ChannelRealization(response=response), floor=1e-6)
    assert result.floored == 2
    assert np.all(np.isfinite(result.grid))
    assert result.grid[0, 1] == pytest.approx(1e6)
    assert result.grid[1, 2] == pytest.approx(-1e6j)
    assert "ZF floor" in caplog.text


def test_zf_shape_mismatch():
    with pytest.raises(DimensionError):
        zf_equalize(np.ones((2, 4)), identity_realization(2, 5))
