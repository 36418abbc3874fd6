"""
FQAM bit mapping, tone activation and per-group QAM/ASK classification.

A frame carries, per multicarrier symbol, one active tone in every group of
M_F adjacent subcarriers. Tone bits select the tone; payload bits are
QAM-mapped, or ASK-mapped on a single axis when the classifier decides that
the active tone would otherwise leak into a neighbouring group.
"""
import logging
import math
from typing import NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import BitUnderrunError, DimensionError, FqamFbmcError
from .models import DecodedFrame, TxFrame
from .schemas import AskPhase, GroupMode, ModulationConfig, RateReport, Scheme

logger = logging.getLogger(__name__)


class FqamConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mf: int
    mq: int
    scheme: Scheme = Scheme.SCHEME1
    ask_phase: AskPhase = AskPhase.NONE
    wrap_groups: bool = False

    @model_validator(mode="after")
    def check_orders(self) -> "FqamConfig":
        if self.mf < 1 or self.mf & (self.mf - 1):
            raise ValueError(f"mf={self.mf} is not a power of two")
        if self.mq < 4 or self.mq & (self.mq - 1) or int(math.log2(self.mq)) % 2:
            raise ValueError(f"mq={self.mq} is not an even power of two >= 4")
        if (self.mf == 1) != (self.scheme == Scheme.PLAIN_QAM):
            raise ValueError("plain-qam and mf=1 go together")
        return self

    @classmethod
    def from_modulation(cls, modulation: ModulationConfig, scheme: Scheme) -> "FqamConfig":
        return cls(
            mf=modulation.mf,
            mq=modulation.mq,
            scheme=scheme,
            ask_phase=modulation.ask_phase,
            wrap_groups=modulation.wrap_groups,
        )

    @property
    def tone_bits(self) -> int:
        return int(math.log2(self.mf))

    @property
    def qam_bits(self) -> int:
        return int(math.log2(self.mq))

    @property
    def ask_bits(self) -> int:
        return self.qam_bits // 2

    @property
    def levels(self) -> int:
        """Amplitude levels per axis, sqrt(M_Q)"""
        return math.isqrt(self.mq)


class GroupLayout(BaseModel):
    model_config = ConfigDict(frozen=True)

    m_total: int
    mf: int

    @model_validator(mode="after")
    def check_cover(self) -> "GroupLayout":
        if self.mf < 1 or self.m_total % self.mf:
            raise ValueError(f"m_total={self.m_total} is not divisible by mf={self.mf}")
        return self

    @property
    def num_groups(self) -> int:
        return self.m_total // self.mf


class FrameErrorCount(NamedTuple):
    bits_sent: int
    bit_errors: int
    mode_mismatches: int


# ==================== Bit helpers ====================

def gray(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    return values ^ (values >> 1)


def gray_inverse(codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    result = codes.copy()
    shift = codes >> 1
    while np.any(shift):
        result ^= shift
        shift >>= 1
    return result


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    """MSB-first bit vectors along the last axis to integers"""
    bits = np.asarray(bits, dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights if bits.shape[-1] else np.zeros(bits.shape[:-1], dtype=np.int64)


def int_to_bits(values: np.ndarray, nbits: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(nbits - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.uint8)


# ==================== QAM / ASK alphabets ====================

def _qam_scale(mq: int) -> float:
    return math.sqrt(2 * (mq - 1) / 3)


def _ask_scale(levels: int) -> float:
    return math.sqrt((levels ** 2 - 1) / 3)


def _levels_to_index(amplitude: np.ndarray, levels: int) -> np.ndarray:
    index = np.rint((amplitude + levels - 1) / 2)
    return np.clip(index, 0, levels - 1).astype(np.int64)


def qam_modulate(bits: np.ndarray, mq: int) -> np.ndarray:
    """Gray square M_Q-QAM on the last axis: first half of the bits drives I, second half Q"""
    half = int(math.log2(mq)) // 2
    levels = math.isqrt(mq)
    i_index = gray_inverse(bits_to_int(bits[..., :half]))
    q_index = gray_inverse(bits_to_int(bits[..., half:]))
    return ((2 * i_index - (levels - 1)) + 1j * (2 * q_index - (levels - 1))) / _qam_scale(mq)


def qam_slice(values: np.ndarray, mq: int) -> np.ndarray:
    half = int(math.log2(mq)) // 2
    levels = math.isqrt(mq)
    scaled = np.asarray(values) * _qam_scale(mq)
    i_bits = int_to_bits(gray(_levels_to_index(scaled.real, levels)), half)
    q_bits = int_to_bits(gray(_levels_to_index(scaled.imag, levels)), half)
    return np.concatenate([i_bits, q_bits], axis=-1)


def ask_modulate(bits: np.ndarray, mq: int) -> np.ndarray:
    levels = math.isqrt(mq)
    index = gray_inverse(bits_to_int(bits))
    return (2 * index - (levels - 1)) / _ask_scale(levels)


def ask_slice(amplitudes: np.ndarray, mq: int) -> np.ndarray:
    levels = math.isqrt(mq)
    nbits = int(math.log2(mq)) // 2
    index = _levels_to_index(np.asarray(amplitudes) * _ask_scale(levels), levels)
    return int_to_bits(gray(index), nbits)


def _check_bits(bits: np.ndarray, expected: int, what: str) -> np.ndarray:
    bits = np.asarray(bits).reshape(-1)
    if bits.size != expected:
        raise DimensionError(f"{what} needs {expected} bits, got {bits.size}")
    return bits


def map_qam(bits, mq: int) -> complex:
    bits = _check_bits(bits, int(math.log2(mq)), f"{mq}-QAM symbol")
    return complex(qam_modulate(bits, mq))


def demap_qam(value: complex, mq: int) -> np.ndarray:
    return qam_slice(np.asarray(value), mq)


def map_ask(bits, mq: int) -> float:
    bits = _check_bits(bits, int(math.log2(mq)) // 2, f"{math.isqrt(mq)}-ASK symbol")
    return float(ask_modulate(bits, mq))


def axis_of(modes: np.ndarray) -> np.ndarray:
    """Unit vector of each ASK mode's axis (1 for real, j for imaginary; QAM gets 1)"""
    return np.where(np.asarray(modes) == GroupMode.ASK_IMAG, 1j, 1.0 + 0j)


def demap_ask(value: complex, mq: int, axis: complex = 1.0, ask_phase: complex = 1.0) -> np.ndarray:
    """De-rotate by the ASK phase, project onto the assigned axis, slice"""
    amplitude = np.real(value * np.conj(ask_phase) * np.conj(axis))
    return ask_slice(amplitude, mq)


def ask_phase_factor(subcarriers: np.ndarray, symbol_index: Union[int, np.ndarray],
                     strategy: AskPhase) -> np.ndarray:
    subcarriers = np.asarray(subcarriers)
    if strategy == AskPhase.NONE:
        return np.ones(subcarriers.shape, dtype=np.complex128)
    return 1j ** ((subcarriers + symbol_index) % 4)


# ==================== Scheme classifiers ====================

def _check_tones(tones: np.ndarray, mf: int) -> np.ndarray:
    tones = np.asarray(tones, dtype=np.int64)
    if tones.size and (tones.min() < 0 or tones.max() >= mf):
        raise FqamFbmcError(f"tone index outside [0, {mf})")
    return tones


def classify_scheme1(tones: np.ndarray, mf: int) -> np.ndarray:
    """Edge-ASK: tone 0 on the real axis, tone M_F-1 on the imaginary axis"""
    tones = _check_tones(tones, mf)
    modes = np.full(tones.shape, GroupMode.QAM, dtype=np.int64)
    modes[tones == 0] = GroupMode.ASK_REAL
    modes[tones == mf - 1] = GroupMode.ASK_IMAG
    return modes


def classify_scheme2(tones: np.ndarray, mf: int, wrap: bool = False) -> np.ndarray:
    """
    Opportunistic ASK on the last axis (groups): only a group whose top tone
    meets the next group's bottom tone switches to ASK. The lower member of the
    pair takes the real axis, the higher one the imaginary axis.
    """
    tones = _check_tones(tones, mf)
    modes = np.full(tones.shape, GroupMode.QAM, dtype=np.int64)
    if tones.shape[-1] == 0:
        return modes
    high = tones == mf - 1
    low = tones == 0

    collide = high[..., :-1] & low[..., 1:]
    modes[..., :-1][collide] = GroupMode.ASK_REAL
    modes[..., 1:][collide] = GroupMode.ASK_IMAG

    if wrap and tones.shape[-1] > 1:
        edge = high[..., -1] & low[..., 0]
        modes[..., -1][edge] = GroupMode.ASK_REAL
        modes[..., 0][edge] = GroupMode.ASK_IMAG
    return modes


def classify(tones: np.ndarray, config: FqamConfig) -> np.ndarray:
    if config.scheme == Scheme.SCHEME1:
        return classify_scheme1(tones, config.mf)
    if config.scheme == Scheme.SCHEME2:
        return classify_scheme2(tones, config.mf, wrap=config.wrap_groups)
    tones = _check_tones(tones, config.mf)
    return np.full(tones.shape, GroupMode.QAM, dtype=np.int64)


def payload_lengths(modes: np.ndarray, config: FqamConfig) -> np.ndarray:
    return np.where(np.asarray(modes) == GroupMode.QAM, config.qam_bits, config.ask_bits)


def _group_values(payload: np.ndarray, modes: np.ndarray, subcarriers: np.ndarray,
                  symbol_index: Union[int, np.ndarray], config: FqamConfig) -> np.ndarray:
    qam = qam_modulate(payload, config.mq)
    ask = ask_modulate(payload[..., :config.ask_bits], config.mq)
    ask = ask * ask_phase_factor(subcarriers, symbol_index, config.ask_phase) * axis_of(modes)
    return np.where(modes == GroupMode.QAM, qam, ask)


# ==================== Frame encode / decode ====================

def encode_frame(bits: np.ndarray, config: FqamConfig, layout: GroupLayout, num_symbols: int) -> TxFrame:
    """
    Build a K x M frame from a bit stream

    Per symbol: tone bits for every group in ascending order, then the
    classifier runs on the full tone vector, then payload bits per group
    (log2 M_Q for QAM groups, half of that for ASK groups).

    Args:
        bits: 0/1 stream, longer than needed is fine
        config: modulation orders and scheme
        layout: subcarrier grouping
        num_symbols: K

    Returns:
        TxFrame with bits_consumed set
    """
    if layout.mf != config.mf:
        raise DimensionError(f"layout groups of {layout.mf} do not match mf={config.mf}")
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    groups, tb, qb = layout.num_groups, config.tone_bits, config.qam_bits

    symbols = np.zeros((num_symbols, layout.m_total), dtype=np.complex128)
    tones = np.zeros((num_symbols, groups), dtype=np.int64)
    modes = np.zeros((num_symbols, groups), dtype=np.int64)
    tone_bits = np.zeros((num_symbols, groups, tb), dtype=np.uint8)
    payload_bits = np.zeros((num_symbols, groups, qb), dtype=np.uint8)
    base = np.arange(groups) * config.mf
    columns = np.arange(qb)

    pos = 0
    for k in range(num_symbols):
        need = groups * tb
        if pos + need > bits.size:
            raise BitUnderrunError(f"symbol {k}: need {need} tone bits, {bits.size - pos} left")
        tone_bits[k] = bits[pos:pos + need].reshape(groups, tb)
        tones[k] = gray_inverse(bits_to_int(tone_bits[k]))
        pos += need

        modes[k] = classify(tones[k], config)
        used = columns[None, :] < payload_lengths(modes[k], config)[:, None]
        need = int(used.sum())
        if pos + need > bits.size:
            raise BitUnderrunError(f"symbol {k}: need {need} payload bits, {bits.size - pos} left")
        payload_bits[k][used] = bits[pos:pos + need]
        pos += need

        active = base + tones[k]
        symbols[k, active] = _group_values(payload_bits[k], modes[k], active, k, config)

    return TxFrame(
        symbols=symbols,
        mf=config.mf,
        mq=config.mq,
        tones=tones,
        modes=modes,
        tone_bits=tone_bits,
        payload_bits=payload_bits,
        bits_consumed=pos,
    )


def decode_frame(received: np.ndarray, config: FqamConfig, layout: GroupLayout,
                 tones: Optional[np.ndarray] = None, modes: Optional[np.ndarray] = None) -> DecodedFrame:
    """
    Two-pass detection: tone by maximum energy per group, then payload slicing
    in the mode the classifier assigns to the detected tones. Known tones or
    modes can be passed in to bypass the corresponding blind step.
    """
    received = np.asarray(received, dtype=np.complex128)
    if received.ndim != 2 or received.shape[1] != layout.m_total:
        raise DimensionError(f"expected K x {layout.m_total} grid, got shape {received.shape}")
    num_symbols, groups = received.shape[0], layout.num_groups
    grouped = received.reshape(num_symbols, groups, config.mf)

    if tones is None:
        tones = np.argmax(np.abs(grouped) ** 2, axis=-1)
    tones = _check_tones(tones, config.mf)
    if modes is None:
        modes = classify(tones, config)
    modes = np.asarray(modes, dtype=np.int64)

    values = np.take_along_axis(grouped, tones[..., None], axis=-1)[..., 0]
    active = np.arange(groups)[None, :] * config.mf + tones
    phase = ask_phase_factor(active, np.arange(num_symbols)[:, None], config.ask_phase)

    qam_bits = qam_slice(values, config.mq)
    amplitude = np.real(values * np.conj(phase) * np.conj(axis_of(modes)))
    ask_bits = np.zeros_like(qam_bits)
    ask_bits[..., :config.ask_bits] = ask_slice(amplitude, config.mq)
    payload_bits = np.where((modes == GroupMode.QAM)[..., None], qam_bits, ask_bits)

    return DecodedFrame(
        tones=tones,
        modes=modes,
        tone_bits=int_to_bits(gray(tones), config.tone_bits),
        payload_bits=payload_bits.astype(np.uint8),
    )


def frame_bits(frame: Union[TxFrame, DecodedFrame], config: FqamConfig) -> np.ndarray:
    """Serialize structured frame bits back into stream order"""
    tone_bits = np.asarray(frame.tone_bits)
    payload_bits = np.asarray(frame.payload_bits)
    lengths = payload_lengths(frame.modes, config)
    columns = np.arange(config.qam_bits)
    chunks = []
    for k in range(tone_bits.shape[0]):
        chunks.append(tone_bits[k].reshape(-1))
        chunks.append(payload_bits[k][columns[None, :] < lengths[k][:, None]])
    if not chunks:
        return np.zeros(0, dtype=np.uint8)
    return np.concatenate(chunks).astype(np.uint8)


def count_frame_errors(sent: TxFrame, decoded: DecodedFrame, config: FqamConfig) -> FrameErrorCount:
    """
    Bit errors aligned per group

    Payloads are compared over the common prefix of the transmitted and
    detected lengths; transmitted bits the receiver never produced count as
    errors, so errors never exceed the bits sent.
    """
    tone_errors = int(np.count_nonzero(np.asarray(sent.tone_bits) != np.asarray(decoded.tone_bits)))
    n_tx = payload_lengths(sent.modes, config)
    n_rx = payload_lengths(decoded.modes, config)
    common = np.minimum(n_tx, n_rx)
    columns = np.arange(config.qam_bits)
    compared = columns[None, None, :] < common[..., None]
    payload_errors = np.count_nonzero(
        (np.asarray(sent.payload_bits) != np.asarray(decoded.payload_bits)) & compared
    )
    missing = int(np.maximum(n_tx - n_rx, 0).sum())

    return FrameErrorCount(
        bits_sent=int(np.asarray(sent.tone_bits).size + n_tx.sum()),
        bit_errors=tone_errors + int(payload_errors) + missing,
        mode_mismatches=int(np.count_nonzero(np.asarray(sent.modes) != decoded.modes)),
    )


def rate(config: FqamConfig) -> RateReport:
    """Average bits per FQAM symbol and the loss against all-QAM payloads"""
    tb, qb, mf = config.tone_bits, config.qam_bits, config.mf
    full = tb + qb
    if config.scheme == Scheme.SCHEME1:
        loss = qb / mf
    elif config.scheme == Scheme.SCHEME2:
        loss = qb / mf ** 2
    else:
        loss = 0.0
    # ASK halves the payload, so the expected loss per group is incidence * qb / 2
    return RateReport(
        mf=mf,
        mq=config.mq,
        scheme=config.scheme,
        r_bits_per_symbol=full - loss,
        r_loss_bits=loss,
        r_loss_fraction=loss / full,
        r_full=full,
    )
