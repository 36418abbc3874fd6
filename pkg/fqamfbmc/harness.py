"""
Experiment runner: seeded Monte Carlo BER sweeps, self-SIR tables, PSD, PAPR
and rate exports.

Every random draw comes from a Generator seeded with
SeedSequence(master_seed, spawn_key=(stream, scheme, point, trial)), so a
single trial can be replayed on its own and totals do not depend on how
trials are spread over workers.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from enum import IntEnum
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np

from .channel import (
    NOISE_CONVENTION,
    AwgnSpec,
    apply_awgn,
    apply_tdl,
    awgn_noise_variance,
    complex_noise,
    eva_spec,
    identity_realization,
    profile_table,
    signal_power,
    zf_equalize,
)
from .config import settings
from .exceptions import ConfigError
from .fbmc_engine import FbmcConfig, analyze, synthesis_complexity, synthesize_fast
from .metrics import empirical_rate, papr_ccdf, papr_per_symbol, self_sir, signal_psd
from .models import PaprCcdf, PsdCurve, TxFrame
from .modulation import FqamConfig, GroupLayout, count_frame_errors, decode_frame, encode_frame, rate
from .prototype_filter import block_interleave, filter_psd, first_sidelobe_db, phydyas, resolve_filter
from .schemas import (
    BerRecord,
    ChannelKind,
    ExperimentConfig,
    Provenance,
    RateReport,
    Scheme,
    SelfSirReport,
    SirMode,
    SweepConfig,
    SweepResult,
    WaveformConfig,
)

logger = logging.getLogger(__name__)


class Stream(IntEnum):
    SWEEP = 0
    ORACLE = 1
    PSD = 2
    PAPR = 3
    RATE = 4


class TrialJob(NamedTuple):
    config: ExperimentConfig
    scheme: Scheme
    scheme_index: int
    snr_index: int
    trial_index: int
    oracle: bool = False


class SirRow(NamedTuple):
    label: str
    report: SelfSirReport


class RateRow(NamedTuple):
    report: RateReport
    r_empirical: float


class ComparisonRow(NamedTuple):
    label: str
    banks: int
    mults_per_symbol: float
    gamma_db: float
    first_sidelobe_db: float


_bank_cache: Dict[str, FbmcConfig] = {}


def get_bank(waveform: WaveformConfig) -> FbmcConfig:
    """Get or build the filter bank for a waveform section (cached per process)"""
    key = waveform.model_dump_json()
    if key not in _bank_cache:
        _bank_cache[key] = FbmcConfig.from_waveform(waveform)
        logger.info(f"Built filter bank {_bank_cache[key].label} (M={waveform.m_total}, L={waveform.overlap})")
    return _bank_cache[key]


def trial_rng(seed: int, stream: Stream, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(stream), *key)))


def provenance(config: ExperimentConfig) -> Provenance:
    return Provenance(
        config_hash=config.config_hash(),
        seed=config.channel.seed,
        code_version=settings.CODE_VERSION,
        noise_convention=NOISE_CONVENTION,
    )


def random_frame(rng: np.random.Generator, fqam: FqamConfig, layout: GroupLayout, num_symbols: int) -> TxFrame:
    """Encode uniform random bits; draws the worst-case bit count up front"""
    budget = num_symbols * layout.num_groups * (fqam.tone_bits + fqam.qam_bits)
    return encode_frame(rng.integers(0, 2, budget, dtype=np.uint8), fqam, layout, num_symbols)


# ==================== BER trials ====================

def run_trial(job: TrialJob) -> BerRecord:
    """One frame through encode, filter bank (or ideal carriers), channel, ZF and decode"""
    config = job.config
    sweep, waveform = config.sweep, config.waveform
    snr_db = sweep.snr_db[job.snr_index]
    stream = Stream.ORACLE if job.oracle else Stream.SWEEP
    rng = trial_rng(config.channel.seed, stream, job.scheme_index, job.snr_index, job.trial_index)

    fqam = FqamConfig.from_modulation(config.modulation, job.scheme)
    layout = GroupLayout(m_total=waveform.m_total, mf=fqam.mf)
    frame = random_frame(rng, fqam, layout, sweep.symbols_per_frame)
    awgn = AwgnSpec(ebn0_db=snr_db, bits_per_group=rate(fqam).r_bits_per_symbol, mf=fqam.mf)

    floored = 0
    if job.oracle:
        symbols = np.asarray(frame.symbols)
        power = float(np.sum(np.abs(symbols) ** 2)) / symbols.size
        variance = awgn_noise_variance(power, snr_db, awgn.bits_per_group, fqam.mf)
        grid = symbols + complex_noise(rng, symbols.size, variance).reshape(symbols.shape)
    else:
        bank = get_bank(waveform)
        tx = synthesize_fast(frame, bank)
        if config.channel.kind == ChannelKind.EVA:
            spec = eva_spec(
                config.channel.speed_kmh,
                config.channel.carrier_hz,
                waveform.sample_rate_hz,
                fading=config.channel.fading,
                num_sinusoids=config.channel.num_sinusoids,
            )
            faded, realization = apply_tdl(tx, spec, rng)
        else:
            faded, realization = tx, identity_realization(frame.num_symbols, waveform.m_total)
        rx = apply_awgn(faded, awgn, rng, reference_power=signal_power(tx))
        grid, floored = zf_equalize(analyze(rx, bank, frame.num_symbols), realization)

    decoded = decode_frame(grid, fqam, layout)
    counts = count_frame_errors(frame, decoded, fqam)
    return BerRecord(
        snr_db=snr_db,
        bits_sent=counts.bits_sent,
        bit_errors=counts.bit_errors,
        mode_mismatches=counts.mode_mismatches,
        zf_floored=floored,
    )


def should_stop(total: BerRecord, sweep: SweepConfig) -> bool:
    if total.bits_sent < sweep.min_bits:
        return False
    return total.bit_errors >= sweep.target_errors or total.bits_sent >= sweep.max_bits


def _run_point(config: ExperimentConfig, scheme: Scheme, scheme_index: int, snr_index: int,
               oracle: bool, executor: Optional[ProcessPoolExecutor]) -> BerRecord:
    sweep = config.sweep
    total = BerRecord(snr_db=sweep.snr_db[snr_index], bits_sent=0, bit_errors=0)
    trial = 0
    while True:
        jobs = [
            TrialJob(config, scheme, scheme_index, snr_index, trial + i, oracle)
            for i in range(sweep.trials_per_batch)
        ]
        results = executor.map(run_trial, jobs) if executor else map(run_trial, jobs)
        # merged in trial order
        for record in results:
            total = total.merged(record)
        trial += sweep.trials_per_batch
        logger.debug(f"{scheme.value} {total.snr_db} dB: {total.bit_errors}/{total.bits_sent} after {trial} trials")
        if should_stop(total, sweep):
            return total


def run_ber_sweep(config: ExperimentConfig, workers: int = 1) -> List[SweepResult]:
    """
    BER curve per configured scheme, plus the ideal-carrier oracle curves when enabled

    Args:
        config: validated experiment
        workers: process count; 1 runs in-process
    """
    meta = provenance(config)
    if config.channel.kind == ChannelKind.EVA:
        spec = eva_spec(config.channel.speed_kmh, config.channel.carrier_hz, config.waveform.sample_rate_hz)
        logger.info(f"EVA at {config.channel.speed_kmh} km/h: f_D={spec.doppler_hz:.1f} Hz, taps {profile_table(spec)}")

    variants: List[Tuple[str, bool]] = [("", False)]
    if config.sweep.include_oracle:
        variants.append(("oracle_", True))

    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    results = []
    try:
        for prefix, oracle in variants:
            for scheme_index, scheme in enumerate(config.modulation.schemes):
                records = []
                for snr_index in range(len(config.sweep.snr_db)):
                    record = _run_point(config, scheme, scheme_index, snr_index, oracle, executor)
                    logger.info(
                        f"{prefix}{scheme.value} @ {record.snr_db} dB: BER={record.ber:.3e} "
                        f"({record.bit_errors}/{record.bits_sent}, mode mismatches {record.mode_mismatches})"
                    )
                    if record.zf_floored:
                        logger.warning(f"{scheme.value} @ {record.snr_db} dB: {record.zf_floored} ZF floor hits")
                    records.append(record)
                results.append(SweepResult(label=f"{prefix}{scheme.value}", records=records, provenance=meta))
    finally:
        if executor is not None:
            executor.shutdown()
    return results


# ==================== Self-SIR and comparison ====================

def _ask_schemes(config: ExperimentConfig) -> List[Scheme]:
    schemes = [s for s in config.modulation.schemes if s in (Scheme.SCHEME1, Scheme.SCHEME2)]
    return schemes or [Scheme.SCHEME1]


def two_bank_baseline(m_total: int, overlap: int) -> FbmcConfig:
    """Two banks: PHYDYAS on even subcarriers, its block-interleaved copy on odd ones"""
    base = phydyas(m_total, overlap)
    return FbmcConfig(m_total=m_total, overlap=overlap, num_banks=2, filters=(base, block_interleave(base)))


def _extra_banks(config: ExperimentConfig) -> List[FbmcConfig]:
    waveform = config.waveform
    return [
        FbmcConfig.single(resolve_filter(name, waveform.m_total, waveform.overlap))
        for name in waveform.extra_filters
    ]


def run_self_sir_table(config: ExperimentConfig) -> List[SirRow]:
    """
    Rows: the configured bank densely loaded, FQAM rows per ASK scheme for
    single-bank waveforms, the two-bank baseline and any extra filter files
    """
    waveform, mf = config.waveform, config.modulation.mf
    bank = get_bank(waveform)
    middle_group = (waveform.m_total // mf) // 2
    non_edge = middle_group * mf + 1
    edge = middle_group * mf + mf - 1

    rows = [SirRow(f"{bank.label}/dense", self_sir(bank, middle_group * mf, SirMode.ALL_ACTIVE))]
    if bank.num_banks == 1 and mf > 1:
        for scheme in _ask_schemes(config):
            fqam = FqamConfig.from_modulation(config.modulation, scheme)
            prefix = f"{bank.label}/{scheme.value}"
            if mf > 2:
                rows.append(SirRow(f"{prefix}/non-edge", self_sir(bank, non_edge, SirMode.FQAM_WORST_CASE, fqam)))
                rows.append(SirRow(f"{prefix}/non-edge", self_sir(bank, non_edge, SirMode.FQAM_AVERAGE, fqam)))
            rows.append(SirRow(f"{prefix}/edge-pair", self_sir(bank, edge, SirMode.PROJECTED_ASK, fqam)))

    if bank.num_banks == 1:
        baseline = two_bank_baseline(waveform.m_total, waveform.overlap)
        for m in (middle_group * mf, middle_group * mf + 1):
            rows.append(SirRow(f"{baseline.label}/dense", self_sir(baseline, m, SirMode.ALL_ACTIVE)))
    for extra in _extra_banks(config):
        rows.append(SirRow(f"{extra.label}/dense", self_sir(extra, middle_group * mf, SirMode.ALL_ACTIVE)))

    for row in rows:
        logger.info(
            f"self-SIR {row.label} [{row.report.mode.value}]: {row.report.gamma_db:.2f} dB"
            f" ({row.report.gamma_total_db:.2f} dB with own-group hops)"
        )
    return rows


def _bank_sidelobe(bank: FbmcConfig, oversample: int) -> float:
    return max(first_sidelobe_db(filter_psd(f, oversample)) for f in bank.filters)


def run_comparison(config: ExperimentConfig) -> List[ComparisonRow]:
    """Complexity, self-interference and spectral confinement per waveform"""
    waveform, oversample = config.waveform, config.psd.oversample
    proposed = FbmcConfig.single(phydyas(waveform.m_total, waveform.overlap))
    mf = config.modulation.mf
    middle_group = (waveform.m_total // mf) // 2
    reference = middle_group * mf + (1 if mf > 2 else 0)
    if mf > 1:
        fqam = FqamConfig.from_modulation(config.modulation, _ask_schemes(config)[0])
        proposed_sir = self_sir(proposed, reference, SirMode.FQAM_WORST_CASE, fqam)
    else:
        proposed_sir = self_sir(proposed, reference, SirMode.ALL_ACTIVE)

    banks = [(f"fqam-{proposed.label}", proposed, proposed_sir)]
    baseline = two_bank_baseline(waveform.m_total, waveform.overlap)
    banks.append((baseline.label, baseline, self_sir(baseline, middle_group * mf, SirMode.ALL_ACTIVE)))
    for extra in _extra_banks(config):
        banks.append((extra.label, extra, self_sir(extra, middle_group * mf, SirMode.ALL_ACTIVE)))

    return [
        ComparisonRow(
            label=label,
            banks=bank.num_banks,
            mults_per_symbol=synthesis_complexity(bank),
            gamma_db=report.gamma_db,
            first_sidelobe_db=_bank_sidelobe(bank, oversample),
        )
        for label, bank, report in banks
    ]


# ==================== Spectra, PAPR, rate ====================

def run_psd_export(config: ExperimentConfig) -> Dict[str, PsdCurve]:
    """Filter responses (built-ins, configured and extra files) and Welch spectra of each scheme"""
    waveform, psd = config.waveform, config.psd
    filters = {
        "phydyas": phydyas(waveform.m_total, waveform.overlap),
        "phydyas-interleaved": block_interleave(phydyas(waveform.m_total, waveform.overlap)),
    }
    for name in list(waveform.filters) + list(waveform.extra_filters):
        f = resolve_filter(name, waveform.m_total, waveform.overlap)
        filters.setdefault(f.label, f)

    curves = {f"filter_{label}": filter_psd(f, psd.oversample) for label, f in filters.items()}
    for label, f in filters.items():
        logger.info(f"{label}: first side-lobe {first_sidelobe_db(curves[f'filter_{label}']):.1f} dB")

    bank = get_bank(waveform)
    for scheme_index, scheme in enumerate(config.modulation.schemes):
        rng = trial_rng(config.channel.seed, Stream.PSD, scheme_index)
        fqam = FqamConfig.from_modulation(config.modulation, scheme)
        layout = GroupLayout(m_total=waveform.m_total, mf=fqam.mf)
        tx = synthesize_fast(random_frame(rng, fqam, layout, psd.num_symbols), bank)
        curves[f"signal_{scheme.value}"] = signal_psd(tx, psd.segment_length, psd.overlap_fraction)
    return curves


def dense_baseline(modulation_mf: int, modulation_mq: int) -> Optional[FqamConfig]:
    """Dense QAM carrying the same bits per active slot, if that order is square"""
    order = modulation_mf * modulation_mq
    if order < 4 or int(np.log2(order)) % 2:
        return None
    return FqamConfig(mf=1, mq=order, scheme=Scheme.PLAIN_QAM)


def collect_papr(config: ExperimentConfig, fqam: FqamConfig, stream_key: int) -> np.ndarray:
    """Per-symbol PAPR samples over config.papr.num_symbols symbols, frame by frame"""
    papr, waveform = config.papr, config.waveform
    bank = get_bank(waveform)
    layout = GroupLayout(m_total=waveform.m_total, mf=fqam.mf)
    samples = []
    remaining, frame_index = papr.num_symbols, 0
    while remaining > 0:
        count = min(papr.symbols_per_frame, remaining)
        rng = trial_rng(config.channel.seed, Stream.PAPR, stream_key, frame_index)
        samples.append(papr_per_symbol(synthesize_fast(random_frame(rng, fqam, layout, count), bank)))
        remaining -= count
        frame_index += 1
    return np.concatenate(samples)


def run_papr_export(config: ExperimentConfig) -> Dict[str, PaprCcdf]:
    curves = {}
    for scheme_index, scheme in enumerate(config.modulation.schemes):
        fqam = FqamConfig.from_modulation(config.modulation, scheme)
        curves[scheme.value] = papr_ccdf(collect_papr(config, fqam, scheme_index), config.papr.min_probability)

    dense = dense_baseline(config.modulation.mf, config.modulation.mq)
    if dense is None:
        logger.warning(f"No square dense-QAM baseline for mf*mq={config.modulation.mf * config.modulation.mq}")
    elif config.modulation.mf > 1:
        samples = collect_papr(config, dense, len(config.modulation.schemes))
        curves[f"dense-{dense.mq}qam"] = papr_ccdf(samples, config.papr.min_probability)
    return curves


def run_rate_report(config: ExperimentConfig) -> List[RateRow]:
    """Formula rate next to the rate measured by encoding uniform bits"""
    settings_rate = config.rate
    rows = []
    for pair_index, (mf, mq) in enumerate(settings_rate.pairs):
        for scheme in settings_rate.schemes:
            try:
                fqam = FqamConfig(
                    mf=mf,
                    mq=mq,
                    scheme=scheme,
                    ask_phase=config.modulation.ask_phase,
                    wrap_groups=config.modulation.wrap_groups,
                )
            except ValueError as e:
                raise ConfigError(str(e), f"rate.pairs.{pair_index}") from e
            layout = GroupLayout(m_total=settings_rate.groups * mf, mf=mf)
            rng = trial_rng(config.channel.seed, Stream.RATE, pair_index, list(Scheme).index(scheme))
            frames = _encode_chunks(rng, fqam, layout, settings_rate.num_symbols)
            row = RateRow(rate(fqam), empirical_rate(frames))
            logger.info(
                f"rate ({mf},{mq}) {scheme.value}: formula {row.report.r_bits_per_symbol:.5f}, "
                f"measured {row.r_empirical:.5f}"
            )
            rows.append(row)
    return rows


def _encode_chunks(rng: np.random.Generator, fqam: FqamConfig, layout: GroupLayout,
                   num_symbols: int, chunk: int = 1000) -> Iterable[TxFrame]:
    remaining = num_symbols
    while remaining > 0:
        count = min(chunk, remaining)
        yield random_frame(rng, fqam, layout, count)
        remaining -= count
