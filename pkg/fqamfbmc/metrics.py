"""
Measurements: self-interference, spectra, PAPR statistics and bit errors.
"""
import logging
import math
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import signal as sps
from scipy import stats

from .exceptions import ConfigError, DimensionError, FqamFbmcError, InsufficientDataError
from .fbmc_engine import FbmcConfig, transmux_matrix
from .modulation import FqamConfig, ask_phase_factor, axis_of, classify
from .models import PaprCcdf, PsdCurve, TimeSignal, TxFrame
from .schemas import BerRecord, GroupMode, Scheme, SelfSirReport, SirMode

logger = logging.getLogger(__name__)

_PSD_FLOOR = 1e-30


class PaprComparison(NamedTuple):
    difference_db: float
    low_db: float
    high_db: float


# ==================== Self-SIR ====================

def leakage_responses(config: FbmcConfig, reference: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Complex gains from every transmit (subcarrier, symbol) into receive (reference, 0)

    Returns:
        (lags, responses) where responses[i, m'] is the gain of a unit symbol on
        subcarrier m' sent at symbol index -lags[i]
    """
    m_total, banks, overlap = config.m_total, config.num_banks, config.overlap
    lags = np.arange(-overlap, overlap + 1)
    rx_filter = config.filter_for(reference)
    responses = np.zeros((lags.size, m_total), dtype=np.complex128)
    for b in range(banks):
        tx_subcarriers = np.arange(b, m_total, banks)
        offsets = (tx_subcarriers - reference) % m_total
        for i, lag in enumerate(lags):
            responses[i, tx_subcarriers] = transmux_matrix(config.filters[b], rx_filter, int(lag))[offsets]
    return lags, responses


def _group_power(power: np.ndarray, mf: int, reference_group: int,
                 tones: Optional[Sequence[int]], reduce) -> float:
    """Per lag and per other group, reduce over the allowed tones, then sum"""
    grouped = power.reshape(power.shape[0], -1, mf)
    if tones is not None:
        grouped = grouped[:, :, list(tones)]
    per_group = reduce(grouped, axis=2)
    per_group[:, reference_group] = 0.0
    return float(per_group.sum())


def self_sir(config: FbmcConfig, reference: int, mode: SirMode,
             fqam: Optional[FqamConfig] = None,
             interferer_tones: Optional[Sequence[int]] = None) -> SelfSirReport:
    """
    Self signal-to-interference ratio at one receive subcarrier

    The interference sum runs over every transmit pair and lag, and the desired
    term is subtracted from it. FQAM modes count the other groups (worst tone
    or tone average per symbol) plus the reference's own inter-symbol terms.
    Leakage from the reference group's other tones at non-zero lags is kept
    out of gamma_db and reported as p_intra_group; gamma_total_db counts it.
    The hop to an adjacent tone one symbol away dominates that sum.

    Args:
        config: filter-bank configuration
        reference: receive subcarrier index
        mode: which activation model to evaluate
        fqam: grouping and ASK conventions, required for every mode but all-active
        interferer_tones: restrict the tones other groups may activate
    """
    if not 0 <= reference < config.m_total:
        raise FqamFbmcError(f"reference subcarrier {reference} outside [0, {config.m_total})")
    lags, responses = leakage_responses(config, reference)
    power = np.abs(responses) ** 2
    zero = int(np.flatnonzero(lags == 0)[0])
    p_signal = float(power[zero, reference])

    if mode == SirMode.ALL_ACTIVE:
        return SelfSirReport.from_powers(mode, reference, p_signal, float(power.sum()) - p_signal)

    if fqam is None:
        raise ConfigError(f"self-SIR mode '{mode.value}' needs the FQAM grouping", "modulation")
    mf = fqam.mf
    if config.m_total % mf:
        raise ConfigError(f"m_total={config.m_total} is not divisible by mf={mf}", "modulation.mf")
    group, tone = divmod(reference, mf)

    own_isi = float(power[:, reference].sum()) - p_signal
    others = [f for f in range(mf) if f != tone]
    intra = power[:, group * mf:(group + 1) * mf][:, others]
    p_intra = float(np.delete(intra, zero, axis=0).max(axis=1).sum()) if others else 0.0

    if mode == SirMode.FQAM_WORST_CASE:
        leakage = _group_power(power, mf, group, interferer_tones, np.max)
        return SelfSirReport.from_powers(mode, reference, p_signal, own_isi + leakage, p_intra)
    if mode == SirMode.FQAM_AVERAGE:
        leakage = _group_power(power, mf, group, interferer_tones, np.mean)
        return SelfSirReport.from_powers(mode, reference, p_signal, own_isi + leakage, p_intra)
    return _projected_ask(config, fqam, reference, lags, responses, power, own_isi, p_intra)


def _projected_ask(config: FbmcConfig, fqam: FqamConfig, reference: int, lags: np.ndarray,
                   responses: np.ndarray, power: np.ndarray, own_isi: float,
                   p_intra: float) -> SelfSirReport:
    """
    Colliding edge pair: the reference and its spectral neighbour in the next
    (or previous) group both run ASK on the axes the classifier assigns. The
    partner's leakage is projected on the reference's detection axis after
    removing the ASK phase; everything else counts at full power.
    """
    mf, m_total = fqam.mf, config.m_total
    group, tone = divmod(reference, mf)
    if fqam.scheme not in (Scheme.SCHEME1, Scheme.SCHEME2):
        raise ConfigError("projected-ask needs an ASK scheme", "modulation.schemes")
    if tone == mf - 1:
        partner, pair_tones, ref_slot = (reference + 1) % m_total, np.array([mf - 1, 0]), 0
    elif tone == 0:
        partner, pair_tones, ref_slot = (reference - 1) % m_total, np.array([mf - 1, 0]), 1
    else:
        raise FqamFbmcError(f"subcarrier {reference} is not an edge tone")
    pair_modes = classify(pair_tones, fqam.model_copy(update={"wrap_groups": False}))
    if np.any(pair_modes == GroupMode.QAM):
        raise FqamFbmcError("edge pair is not ASK under the configured scheme")
    ref_axis, partner_axis = axis_of(pair_modes[ref_slot]), axis_of(pair_modes[1 - ref_slot])

    symbols = -lags
    ref_rotation = ask_phase_factor(np.array(reference), 0, fqam.ask_phase) * ref_axis
    partner_rotation = ask_phase_factor(np.full(lags.shape, partner), symbols, fqam.ask_phase) * partner_axis
    projected = np.real(responses[:, partner] * partner_rotation * np.conj(ref_rotation)) ** 2

    # partner group may move to another tone away from the collision symbol
    partner_group = partner // mf
    grouped = power[:, partner_group * mf:(partner_group + 1) * mf].copy()
    grouped[:, partner % mf] = projected
    zero = int(np.flatnonzero(lags == 0)[0])
    partner_leakage = float(projected[zero]) + float(np.delete(grouped, zero, axis=0).max(axis=1).sum())

    rest = _group_power(power, mf, group, None, np.max)
    rest -= float(power[:, partner_group * mf:(partner_group + 1) * mf].max(axis=1).sum())

    p_signal = float(power[zero, reference])
    return SelfSirReport.from_powers(
        SirMode.PROJECTED_ASK, reference, p_signal, own_isi + partner_leakage + max(rest, 0.0), p_intra
    )


# ==================== Spectra ====================

def signal_psd(signal: Union[TimeSignal, np.ndarray], segment_length: int = 1024,
               overlap_fraction: float = 0.5, samples_per_symbol: Optional[int] = None) -> PsdCurve:
    """
    Welch periodogram with a periodic Hann window, peak-normalized

    The frequency axis is in subcarrier spacings (sample rate M).
    """
    if isinstance(signal, TimeSignal):
        samples, fs = np.asarray(signal.samples), signal.num_subcarriers
    else:
        samples, fs = np.asarray(signal), samples_per_symbol or 1
    if samples.size < 2 * segment_length:
        raise InsufficientDataError(
            f"PSD needs at least {2 * segment_length} samples, got {samples.size}"
        )
    freqs, pxx = sps.welch(
        samples,
        fs=fs,
        window="hann",
        nperseg=segment_length,
        noverlap=int(segment_length * overlap_fraction),
        detrend=False,
        return_onesided=False,
        scaling="density",
    )
    freqs, pxx = np.fft.fftshift(freqs), np.fft.fftshift(pxx)
    power_db = 10 * np.log10(np.maximum(pxx / pxx.max(), _PSD_FLOOR))
    return PsdCurve(freq_axis=freqs, power_db=power_db)


# ==================== PAPR ====================

def papr_per_symbol(signal: TimeSignal) -> np.ndarray:
    """PAPR in dB of each M-sample stride starting at a symbol boundary"""
    m = signal.num_subcarriers
    strides = np.asarray(signal.samples)[: signal.num_symbols * m].reshape(signal.num_symbols, m)
    power = np.abs(strides) ** 2
    mean = power.mean(axis=1)
    silent = mean <= 0
    if np.any(silent):
        logger.debug(f"Skipping {int(silent.sum())} silent symbol strides")
    return 10 * np.log10(power.max(axis=1)[~silent] / mean[~silent])


def papr_ccdf(samples: Union[TimeSignal, np.ndarray], min_probability: float = 1e-3,
              step_db: float = 0.1) -> PaprCcdf:
    """
    Complementary CDF of per-symbol PAPR on a fixed dB grid

    The grid starts one step below the smallest sample, so its first value is 1.
    """
    papr = papr_per_symbol(samples) if isinstance(samples, TimeSignal) else np.asarray(samples, dtype=float)
    needed = math.ceil(10 / min_probability)
    if papr.size < needed:
        raise InsufficientDataError(
            f"CCDF down to {min_probability:g} needs {needed} symbols, got {papr.size}"
        )
    start = (math.floor(papr.min() / step_db) - 1) * step_db
    stop = (math.ceil(papr.max() / step_db) + 1) * step_db
    thresholds = np.round(np.arange(start, stop + step_db / 2, step_db), 10)
    ordered = np.sort(papr)
    exceed = 1 - np.searchsorted(ordered, thresholds, side="right") / ordered.size
    return PaprCcdf(thresholds=thresholds, exceed_prob=exceed, num_samples=ordered.size)


def ccdf_level_crossing(ccdf: PaprCcdf, level: float) -> float:
    """First threshold at which the exceedance probability drops to the level"""
    below = np.flatnonzero(np.asarray(ccdf.exceed_prob) <= level)
    if below.size == 0:
        raise InsufficientDataError(f"CCDF never reaches {level:g}")
    return float(ccdf.thresholds[below[0]])


def compare_papr(papr_a: np.ndarray, papr_b: np.ndarray, level: float,
                 rng: np.random.Generator, resamples: int = 200) -> PaprComparison:
    """
    Difference of the (1 - level) PAPR quantiles, a minus b, with a 95% bootstrap interval
    """
    papr_a, papr_b = np.asarray(papr_a), np.asarray(papr_b)
    q = 1 - level
    point = float(np.quantile(papr_a, q) - np.quantile(papr_b, q))
    diffs = np.empty(resamples)
    for i in range(resamples):
        a = rng.choice(papr_a, size=papr_a.size)
        b = rng.choice(papr_b, size=papr_b.size)
        diffs[i] = np.quantile(a, q) - np.quantile(b, q)
    low, high = np.quantile(diffs, [0.025, 0.975])
    return PaprComparison(point, float(low), float(high))


# ==================== Errors and rate ====================

def count_errors(tx_bits: np.ndarray, rx_bits: np.ndarray, snr_db: float = 0.0) -> BerRecord:
    tx_bits, rx_bits = np.asarray(tx_bits).reshape(-1), np.asarray(rx_bits).reshape(-1)
    if tx_bits.size != rx_bits.size:
        raise DimensionError(f"bit streams differ in length ({tx_bits.size} vs {rx_bits.size})")
    return BerRecord(
        snr_db=snr_db,
        bits_sent=tx_bits.size,
        bit_errors=int(np.count_nonzero(tx_bits != rx_bits)),
    )


def empirical_rate(frames: Iterable[TxFrame]) -> float:
    """Consumed tone and payload bits per group per symbol"""
    bits = slots = 0
    for frame in frames:
        bits += frame.bits_consumed
        slots += frame.num_symbols * (frame.num_subcarriers // frame.mf)
    if not slots:
        raise InsufficientDataError("no symbols to measure a rate over")
    return bits / slots


def wilson_interval(errors: int, bits: int, confidence: float = 0.95) -> Tuple[float, float]:
    if bits <= 0:
        return 0.0, 1.0
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    p = errors / bits
    denom = 1 + z ** 2 / bits
    centre = (p + z ** 2 / (2 * bits)) / denom
    spread = z * math.sqrt(p * (1 - p) / bits + z ** 2 / (4 * bits ** 2)) / denom
    return max(0.0, centre - spread), min(1.0, centre + spread)


def _snr_at(records: Sequence[BerRecord], ber_target: float) -> float:
    points = sorted((r.snr_db, r.ber) for r in records if r.ber > 0)
    for (s0, b0), (s1, b1) in zip(points, points[1:]):
        if b0 >= ber_target >= b1 and b0 != b1:
            frac = (math.log10(b0) - math.log10(ber_target)) / (math.log10(b0) - math.log10(b1))
            return s0 + frac * (s1 - s0)
    raise InsufficientDataError(f"BER curve does not cross {ber_target:g}")


def horizontal_gap_db(curve_a: Sequence[BerRecord], curve_b: Sequence[BerRecord], ber_target: float) -> float:
    """SNR that curve a needs beyond curve b to reach the target BER (log-linear interpolation)"""
    return _snr_at(curve_a, ber_target) - _snr_at(curve_b, ber_target)
