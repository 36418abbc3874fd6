"""
Synthesis and analysis filter banks.

Symbols are spaced M samples apart and each pulse spans L*M samples. With two
banks, bank b carries the subcarriers m with m mod 2 == b.
"""
import logging
import math
from typing import Any, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import DimensionError, FqamFbmcError
from .models import PrototypeFilter, TimeSignal, TxFrame, expected_signal_length
from .prototype_filter import resolve_filter
from .schemas import WaveformConfig

logger = logging.getLogger(__name__)


class FbmcConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    m_total: int
    overlap: int
    num_banks: int = 1
    filters: Tuple[Any, ...]

    @model_validator(mode="after")
    def check_filters(self) -> "FbmcConfig":
        if self.num_banks not in (1, 2):
            raise ValueError(f"num_banks must be 1 or 2, got {self.num_banks}")
        if self.m_total % self.num_banks:
            raise ValueError(f"m_total={self.m_total} is not divisible by num_banks={self.num_banks}")
        if len(self.filters) != self.num_banks:
            raise ValueError(f"expected {self.num_banks} filter(s), got {len(self.filters)}")
        for f in self.filters:
            if not isinstance(f, PrototypeFilter):
                raise ValueError("filters must be PrototypeFilter instances")
            if f.length != self.overlap * self.m_total:
                raise ValueError(f"filter '{f.label}' has {f.length} taps, expected {self.overlap * self.m_total}")
        return self

    @classmethod
    def from_waveform(cls, waveform: WaveformConfig) -> "FbmcConfig":
        filters = tuple(resolve_filter(name, waveform.m_total, waveform.overlap) for name in waveform.filters)
        return cls(
            m_total=waveform.m_total,
            overlap=waveform.overlap,
            num_banks=waveform.num_banks,
            filters=filters,
        )

    @classmethod
    def single(cls, f: PrototypeFilter) -> "FbmcConfig":
        return cls(m_total=f.num_subcarriers, overlap=f.overlap, num_banks=1, filters=(f,))

    @property
    def pulse_length(self) -> int:
        return self.overlap * self.m_total

    @property
    def label(self) -> str:
        return "+".join(f.label for f in self.filters)

    def filter_for(self, m: int) -> PrototypeFilter:
        return self.filters[m % self.num_banks]


def _check_frame(frame: TxFrame, config: FbmcConfig) -> np.ndarray:
    if frame.num_subcarriers != config.m_total:
        raise DimensionError(f"frame has {frame.num_subcarriers} subcarriers, config expects {config.m_total}")
    return np.asarray(frame.symbols)


def _overlap_add(blocks: np.ndarray, config: FbmcConfig) -> np.ndarray:
    """Sum K pulses of L*M samples placed M samples apart"""
    num_symbols = blocks.shape[0]
    m, overlap = config.m_total, config.overlap
    out = np.zeros((num_symbols - 1 + overlap, m), dtype=np.complex128)
    blocks = blocks.reshape(num_symbols, overlap, m)
    for l in range(overlap):
        out[l:l + num_symbols] += blocks[:, l, :]
    return out.reshape(-1)


def _to_signal(samples: np.ndarray, num_symbols: int, config: FbmcConfig) -> TimeSignal:
    return TimeSignal(
        samples=samples,
        num_subcarriers=config.m_total,
        overlap=config.overlap,
        num_symbols=num_symbols,
    )


def modulated_pulses(config: FbmcConfig) -> np.ndarray:
    """M x L*M matrix whose row m is p_b[n] exp(j 2 pi n m / M)"""
    n = np.arange(config.pulse_length)
    m = np.arange(config.m_total)
    carriers = np.exp(2j * np.pi * np.outer(m, n) / config.m_total)
    taps = np.stack([config.filter_for(i).coeffs for i in range(config.m_total)])
    return taps * carriers


def synthesize_direct(frame: TxFrame, config: FbmcConfig) -> TimeSignal:
    """Literal double sum over symbols and subcarriers"""
    symbols = _check_frame(frame, config)
    blocks = symbols @ modulated_pulses(config)
    return _to_signal(_overlap_add(blocks, config), frame.num_symbols, config)


def synthesize_fast(frame: TxFrame, config: FbmcConfig) -> TimeSignal:
    """
    Transform-based synthesis

    Per bank: an (M/B)-point inverse DFT of that bank's subcarriers, B*L-fold
    periodic repetition, multiplication by the bank filter with its
    exp(j 2 pi n b / M) offset, then overlap-add across symbols.
    """
    symbols = _check_frame(frame, config)
    banks, m = config.num_banks, config.m_total
    size = m // banks
    n = np.arange(config.pulse_length)

    blocks = np.zeros((frame.num_symbols, config.pulse_length), dtype=np.complex128)
    for b in range(banks):
        periodic = np.fft.ifft(symbols[:, b::banks], axis=1) * size
        shaped = config.filters[b].coeffs * np.exp(2j * np.pi * n * b / m)
        blocks += np.tile(periodic, (1, banks * config.overlap)) * shaped

    return _to_signal(_overlap_add(blocks, config), frame.num_symbols, config)


def analyze(signal: TimeSignal, config: FbmcConfig, num_symbols: int) -> np.ndarray:
    """
    Matched-filter bank sampled every M samples

    Returns:
        K x M grid with entry (k, m) = sum_n x[n] p_b[n - kM] exp(-j 2 pi n m / M)
    """
    samples = np.asarray(signal.samples if isinstance(signal, TimeSignal) else signal)
    expected = expected_signal_length(num_symbols, config.m_total, config.overlap)
    if samples.size != expected:
        raise DimensionError(f"{num_symbols} symbols need {expected} samples, got {samples.size}")

    banks, m = config.num_banks, config.m_total
    size = m // banks
    n = np.arange(config.pulse_length)
    segments = sliding_window_view(samples, config.pulse_length)[::m][:num_symbols]

    grid = np.zeros((num_symbols, m), dtype=np.complex128)
    for b in range(banks):
        weighted = segments * (config.filters[b].coeffs * np.exp(-2j * np.pi * n * b / m))
        folded = weighted.reshape(num_symbols, banks * config.overlap, size).sum(axis=1)
        grid[:, b::banks] = np.fft.fft(folded, axis=1)
    return grid


def _check_lag(tx_filter: PrototypeFilter, rx_filter: PrototypeFilter, k: int) -> None:
    if tx_filter.length != rx_filter.length:
        raise DimensionError(f"filters differ in length ({tx_filter.length} vs {rx_filter.length})")
    if abs(k) > tx_filter.overlap:
        raise FqamFbmcError(f"lag {k} outside [-{tx_filter.overlap}, {tx_filter.overlap}]")


def _lagged_product(tx_filter: PrototypeFilter, rx_filter: PrototypeFilter, k: int) -> np.ndarray:
    """tx[n] * conj(rx[n - kM]) on [0, L*M), zero where rx is out of support"""
    length, m = tx_filter.length, tx_filter.num_subcarriers
    shifted = np.zeros(length)
    shift = k * m
    if shift >= 0:
        shifted[shift:] = rx_filter.coeffs[:length - shift]
    else:
        shifted[:length + shift] = rx_filter.coeffs[-shift:]
    return tx_filter.coeffs * np.conj(shifted)


def transmux_response(tx_filter: PrototypeFilter, rx_filter: PrototypeFilter,
                      m: int, m_prime: int, k: int) -> complex:
    """
    Response of receive filter m' at lag k*M to a unit symbol on transmit subcarrier m
    """
    _check_lag(tx_filter, rx_filter, k)
    n = np.arange(tx_filter.length)
    product = _lagged_product(tx_filter, rx_filter, k)
    phase = np.exp(2j * np.pi * n * (m - m_prime) / tx_filter.num_subcarriers)
    return complex(np.sum(product * phase))


def transmux_matrix(tx_filter: PrototypeFilter, rx_filter: PrototypeFilter, k: int) -> np.ndarray:
    """
    Transmultiplexer response for every subcarrier offset at lag k

    Entry d is t[(m, m'), k] for any pair with (m - m') mod M == d.
    """
    _check_lag(tx_filter, rx_filter, k)
    m = tx_filter.num_subcarriers
    folded = _lagged_product(tx_filter, rx_filter, k).reshape(-1, m).sum(axis=0)
    return np.fft.ifft(folded) * m


def synthesis_complexity(config: FbmcConfig) -> float:
    """Complex multiplications per multicarrier symbol of the transform-based synthesizer"""
    size = config.m_total // config.num_banks
    transforms = config.num_banks * size / 2 * math.log2(size) if size > 1 else 0.0
    return transforms + config.pulse_length
