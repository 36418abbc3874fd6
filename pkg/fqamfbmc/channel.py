"""
AWGN and tapped-delay-line fading channels plus one-tap ZF equalization.

Every stochastic function takes an explicit numpy Generator; the same
generator state always produces the same output.
"""
import logging
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import settings
from .exceptions import DimensionError, FqamFbmcError
from .models import ChannelRealization, TimeSignal

logger = logging.getLogger(__name__)

NOISE_CONVENTION = "sigma2 = P_meas / (10^(EbN0/10) * R_group / M_F), P_meas = mean |x|^2 over (K x M) samples"

# Extended Vehicular A profile
EVA_DELAYS_NS = (0, 30, 150, 310, 370, 710, 1090, 1730, 2510)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


class AwgnSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    ebn0_db: float
    bits_per_group: float = Field(..., gt=0)
    mf: int = Field(1, ge=1)

    def noise_variance(self, power: float) -> float:
        return awgn_noise_variance(power, self.ebn0_db, self.bits_per_group, self.mf)


class TdlSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    delays_ns: Tuple[float, ...] = EVA_DELAYS_NS
    powers_db: Tuple[float, ...] = EVA_POWERS_DB
    doppler_hz: float = Field(0.0, ge=0)
    sample_rate_hz: float = Field(..., gt=0)
    fading: bool = True
    num_sinusoids: int = Field(32, ge=1)

    @model_validator(mode="after")
    def check_profile(self) -> "TdlSpec":
        if len(self.delays_ns) != len(self.powers_db) or not self.delays_ns:
            raise ValueError("delays_ns and powers_db must be non-empty and of equal length")
        if min(self.delays_ns) < 0:
            raise ValueError("tap delays must be non-negative")
        return self

    @property
    def tap_powers(self) -> np.ndarray:
        """Linear tap powers scaled to unit total gain"""
        linear = 10 ** (np.asarray(self.powers_db) / 10)
        return linear / linear.sum()

    @property
    def delay_samples(self) -> np.ndarray:
        return np.rint(np.asarray(self.delays_ns) * 1e-9 * self.sample_rate_hz).astype(np.int64)


class ZfResult(NamedTuple):
    grid: np.ndarray
    floored: int


def doppler_hz(speed_kmh: float, carrier_hz: float = settings.CARRIER_FREQUENCY_HZ) -> float:
    return speed_kmh / 3.6 * carrier_hz / settings.SPEED_OF_LIGHT


def eva_spec(speed_kmh: float, carrier_hz: float, sample_rate_hz: float,
             fading: bool = True, num_sinusoids: int = 32) -> TdlSpec:
    return TdlSpec(
        doppler_hz=doppler_hz(speed_kmh, carrier_hz),
        sample_rate_hz=sample_rate_hz,
        fading=fading,
        num_sinusoids=num_sinusoids,
    )


def awgn_noise_variance(power: float, ebn0_db: float, bits_per_group: float, mf: int) -> float:
    """
    Per-sample complex noise variance for a signal of mean power `power`

    Each group of mf subcarriers carries bits_per_group bits per symbol, so
    Eb = power * mf / bits_per_group.
    """
    if power <= 0:
        raise FqamFbmcError(f"signal power must be positive, got {power}")
    return power / (10 ** (ebn0_db / 10) * bits_per_group / mf)


def signal_power(signal: TimeSignal) -> float:
    """Energy per symbol slot, divided by M (mean power over K x M samples)"""
    samples = np.asarray(signal.samples)
    return float(np.sum(np.abs(samples) ** 2)) / (signal.num_symbols * signal.num_subcarriers)


def complex_noise(rng: np.random.Generator, size: int, variance: float) -> np.ndarray:
    return np.sqrt(variance / 2) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def apply_awgn(signal: TimeSignal, spec: AwgnSpec, rng: np.random.Generator,
               reference_power: Optional[float] = None) -> TimeSignal:
    """
    Add circular complex Gaussian noise

    Args:
        signal: transmitted (or faded) signal
        spec: Eb/N0 and bits per group for the Eb accounting
        rng: noise generator
        reference_power: power used for calibration; defaults to the measured
            power of `signal`. Pass the transmit power when the input is faded.
    """
    power = signal_power(signal) if reference_power is None else reference_power
    variance = spec.noise_variance(power)
    samples = np.asarray(signal.samples)
    return signal.with_samples(samples + complex_noise(rng, samples.size, variance))


def tap_gains(spec: TdlSpec, rng: np.random.Generator, sample_times: np.ndarray) -> np.ndarray:
    """
    Per-tap complex gains at the given times (seconds), shape (taps, times)

    Fading taps are sums of num_sinusoids equal-power paths with uniform
    angle of arrival and uniform phase: g(t) = sqrt(P/N) sum exp(j(2 pi f_D cos(a) t + phi)).
    """
    powers = spec.tap_powers
    sample_times = np.asarray(sample_times, dtype=float)
    if not spec.fading:
        return np.sqrt(powers)[:, None] * np.ones((1, sample_times.size), dtype=np.complex128)

    n = spec.num_sinusoids
    gains = np.empty((powers.size, sample_times.size), dtype=np.complex128)
    for i, power in enumerate(powers):
        arrival = rng.uniform(0, 2 * np.pi, n)
        phase = rng.uniform(0, 2 * np.pi, n)
        shifts = 2 * np.pi * spec.doppler_hz * np.cos(arrival)
        gains[i] = np.sqrt(power / n) * np.exp(1j * (np.outer(sample_times, shifts) + phase)).sum(axis=1)
    return gains


def apply_tdl(signal: TimeSignal, spec: TdlSpec, rng: np.random.Generator) -> Tuple[TimeSignal, ChannelRealization]:
    """
    Time-varying tapped delay line

    Returns the faded signal (same length as the input, tails past the end are
    dropped) and the genie response per symbol and subcarrier, taken with the
    taps frozen at each pulse midpoint kM + LM/2.
    """
    m, overlap, num_symbols = signal.num_subcarriers, signal.overlap, signal.num_symbols
    delays = spec.delay_samples
    if delays.max() > overlap * m:
        raise FqamFbmcError(f"tap delay of {int(delays.max())} samples exceeds L*M={overlap * m}")

    samples = np.asarray(signal.samples)
    n = np.arange(samples.size)
    gains = tap_gains(spec, rng, n / spec.sample_rate_hz)

    faded = np.zeros_like(samples)
    for gain, delay in zip(gains, delays):
        if delay:
            faded[delay:] += gain[delay:] * samples[:-delay]
        else:
            faded += gain * samples

    midpoints = np.arange(num_symbols) * m + overlap * m // 2
    midpoints = np.minimum(midpoints, samples.size - 1)
    steering = np.exp(-2j * np.pi * np.outer(delays, np.arange(m)) / m)
    response = gains[:, midpoints].T @ steering
    return signal.with_samples(faded), ChannelRealization(response=response)


def zf_equalize(grid: np.ndarray, realization: ChannelRealization,
                floor: float = settings.ZF_FLOOR) -> ZfResult:
    """One-tap zero forcing; responses weaker than the floor are clamped to it"""
    grid = np.asarray(grid)
    response = np.asarray(realization.response)
    if grid.shape != response.shape:
        raise DimensionError(f"grid {grid.shape} and channel response {response.shape} differ")
    magnitude = np.abs(response)
    weak = magnitude < floor
    if np.any(weak):
        unit = np.where(magnitude > 0, response / np.where(magnitude > 0, magnitude, 1), 1)
        response = np.where(weak, floor * unit, response)
        logger.warning(f"ZF floor hit on {int(weak.sum())} of {weak.size} entries")
    return ZfResult(grid / response, int(weak.sum()))


def identity_realization(num_symbols: int, num_subcarriers: int) -> ChannelRealization:
    return ChannelRealization(response=np.ones((num_symbols, num_subcarriers), dtype=np.complex128))


def profile_table(spec: TdlSpec) -> List[Tuple[int, float]]:
    """(delay in samples, linear power) per tap, for logging and reports"""
    return [(int(d), float(p)) for d, p in zip(spec.delay_samples, spec.tap_powers)]
