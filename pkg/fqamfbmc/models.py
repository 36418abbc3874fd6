"""
Array-carrying domain containers.

These are pydantic models with numpy payloads; arrays are validated on
construction and frozen (read-only) afterwards so instances can be shared
between threads and Monte Carlo workers.
"""
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator



def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class PrototypeFilter(_ArrayModel):
    coeffs: Any
    overlap: int
    num_subcarriers: int
    label: str = "custom"

    @field_validator("coeffs", mode="before")
    @classmethod
    def coerce_coeffs(cls, v: Any) -> np.ndarray:
        coeffs = np.array(v, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("filter coefficients must be finite")
        return _frozen(coeffs)

    @model_validator(mode="after")
    def check_length(self) -> "PrototypeFilter":
        if self.overlap < 2 or self.num_subcarriers < 2:
            raise ValueError("overlap and num_subcarriers must both be at least 2")
        if self.coeffs.size != self.overlap * self.num_subcarriers:
            raise ValueError(
                f"expected {self.overlap * self.num_subcarriers} coefficients, got {self.coeffs.size}"
            )
        return self

    @property
    def length(self) -> int:
        return self.coeffs.size

    @property
    def energy(self) -> float:
        return float(np.sum(self.coeffs ** 2))


class PsdCurve(_ArrayModel):
    freq_axis: Any  # multiples of the subcarrier spacing
    power_db: Any   # relative to peak

    @model_validator(mode="after")
    def check_axis(self) -> "PsdCurve":
        freq = _frozen(np.asarray(self.freq_axis, dtype=np.float64))
        power = _frozen(np.asarray(self.power_db, dtype=np.float64))
        if freq.shape != power.shape or freq.ndim != 1:
            raise ValueError("freq_axis and power_db must be 1-D arrays of equal length")
        if np.any(np.diff(freq) <= 0):
            raise ValueError("freq_axis must be strictly increasing")
        object.__setattr__(self, "freq_axis", freq)
        object.__setattr__(self, "power_db", power)
        return self


class TxFrame(_ArrayModel):
    """K x M grid of subcarrier values plus the per-group FQAM annotations"""

    symbols: Any
    mf: int = 1
    mq: int = 4
    tones: Optional[Any] = None         # K x G tone indices
    modes: Optional[Any] = None         # K x G GroupMode values
    tone_bits: Optional[Any] = None     # K x G x log2(mf)
    payload_bits: Optional[Any] = None  # K x G x log2(mq), ASK groups use the first half
    bits_consumed: int = 0

    @field_validator("symbols", mode="before")
    @classmethod
    def coerce_symbols(cls, v: Any) -> np.ndarray:
        symbols = np.array(v, dtype=np.complex128)
        if symbols.ndim != 2:
            raise ValueError(f"frame must be a K x M grid, got shape {symbols.shape}")
        if not np.all(np.isfinite(symbols)):
            raise ValueError("frame values must be finite")
        return _frozen(symbols)

    @property
    def num_symbols(self) -> int:
        return self.symbols.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.symbols.shape[1]


class DecodedFrame(_ArrayModel):
    tones: Any
    modes: Any
    tone_bits: Any
    payload_bits: Any


class TimeSignal(_ArrayModel):
    samples: Any
    num_subcarriers: int
    overlap: int
    num_symbols: int

    @field_validator("samples", mode="before")
    @classmethod
    def coerce_samples(cls, v: Any) -> np.ndarray:
        samples = np.array(v, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(samples)):
            raise ValueError("signal samples must be finite")
        return _frozen(samples)

    @model_validator(mode="after")
    def check_length(self) -> "TimeSignal":
        expected = expected_signal_length(self.num_symbols, self.num_subcarriers, self.overlap)
        if self.samples.size != expected:
            raise ValueError(
                f"signal of {self.num_symbols} symbols needs {expected} samples, got {self.samples.size}"
            )
        return self

    def with_samples(self, samples: np.ndarray) -> "TimeSignal":
        return TimeSignal(
            samples=samples,
            num_subcarriers=self.num_subcarriers,
            overlap=self.overlap,
            num_symbols=self.num_symbols,
        )


class ChannelRealization(_ArrayModel):
    response: Any  # K x M frequency response H_m[k]

    @field_validator("response", mode="before")
    @classmethod
    def coerce_response(cls, v: Any) -> np.ndarray:
        response = np.array(v, dtype=np.complex128)
        if not np.all(np.isfinite(response)):
            raise ValueError("channel response must be finite")
        return _frozen(response)


class PaprCcdf(_ArrayModel):
    thresholds: Any   # dB
    exceed_prob: Any  # Pr(PAPR > threshold)
    num_samples: int


def expected_signal_length(num_symbols: int, num_subcarriers: int, overlap: int) -> int:
    return (num_symbols - 1) * num_subcarriers + overlap * num_subcarriers
