"""
Self-SIR, PSD, PAPR and error statistics
"""
import numpy as np
import pytest

from fqamfbmc.exceptions import ConfigError, DimensionError, FqamFbmcError, InsufficientDataError
from fqamfbmc.fbmc_engine import synthesize_fast
from fqamfbmc.metrics import (
    ccdf_level_crossing,
    compare_papr,
    count_errors,
    horizontal_gap_db,
    leakage_responses,
    papr_ccdf,
    papr_per_symbol,
    self_sir,
    signal_psd,
    wilson_interval,
)
from fqamfbmc.models import TimeSignal, TxFrame
from fqamfbmc.modulation import FqamConfig
from fqamfbmc.schemas import AskPhase, BerRecord, Scheme, SirMode

pytestmark = pytest.mark.unit


@pytest.fixture
def fqam_s1():
    return FqamConfig(mf=4, mq=4, scheme=Scheme.SCHEME1)


# ==================== Self-SIR ====================

def test_leakage_includes_desired_term(bank100):
    lags, responses = leakage_responses(bank100, 42)
    assert list(lags) == list(range(-4, 5))
    assert responses[4, 42] == pytest.approx(1.0, abs=1e-12)
    assert abs(responses[4, 43]) == pytest.approx(0.2393, abs=1e-3)


def test_all_active_sir(bank100):
    report = self_sir(bank100, 50, SirMode.ALL_ACTIVE)
    assert report.p_signal == pytest.approx(1.0, abs=1e-12)
    assert 6.0 < report.gamma_db < 9.0


def test_all_active_sir_is_translation_invariant(bank100):
    gammas = [self_sir(bank100, m, SirMode.ALL_ACTIVE).gamma_db for m in (0, 1, 50, 99)]
    np.testing.assert_allclose(gammas, gammas[0], atol=1e-9)


def test_fqam_modes_need_grouping(bank100):
    with pytest.raises(ConfigError):
        self_sir(bank100, 50, SirMode.FQAM_WORST_CASE)


def test_reference_out_of_range(bank100):
    with pytest.raises(FqamFbmcError):
        self_sir(bank100, 100, SirMode.ALL_ACTIVE)


def test_fqam_sir_ordering(bank100, fqam_s1):
    """Sparse activation beats dense; averaging over tones beats the worst tone"""
    dense = self_sir(bank100, 51, SirMode.ALL_ACTIVE).gamma_db
    worst = self_sir(bank100, 51, SirMode.FQAM_WORST_CASE, fqam_s1).gamma_db
    average = self_sir(bank100, 51, SirMode.FQAM_AVERAGE, fqam_s1).gamma_db
    assert worst >= dense
    assert average >= worst


def test_inner_tone_barely_interfered(bank100, fqam_s1):
    """An inner tone sits two or more spacings from any other group's tone"""
    report = self_sir(bank100, 41, SirMode.FQAM_WORST_CASE, fqam_s1)
    assert report.gamma_db > 40.0
    assert report.p_intra_group > 0.0


def test_own_group_hops_dominate_total_sir(bank100, fqam_s1):
    """Adjacent tone of the same group one symbol away leaks |t| = 0.125"""
    for mode in (SirMode.FQAM_WORST_CASE, SirMode.FQAM_AVERAGE):
        report = self_sir(bank100, 49, mode, fqam_s1)
        assert report.gamma_db > 60.0
        assert report.p_intra_group == pytest.approx(2 * 0.125 ** 2, rel=0.01)
        assert report.gamma_total_db == pytest.approx(15.05, abs=0.05)


def test_dense_total_sir_equals_gamma(bank100):
    report = self_sir(bank100, 49, SirMode.ALL_ACTIVE)
    assert report.p_intra_group == 0.0
    assert report.gamma_total_db == report.gamma_db


def test_edge_tone_sees_neighbour_group(bank100, fqam_s1):
    report = self_sir(bank100, 43, SirMode.FQAM_WORST_CASE, fqam_s1)
    assert 8.0 < report.gamma_db < 15.0


def test_interferer_tone_restriction(bank100, fqam_s1):
    """Keeping the neighbours off their edge tones removes the adjacent leakage"""
    full = self_sir(bank100, 43, SirMode.FQAM_WORST_CASE, fqam_s1)
    inner = self_sir(bank100, 43, SirMode.FQAM_WORST_CASE, fqam_s1, interferer_tones=[1, 2])
    assert inner.gamma_db > full.gamma_db + 20


@pytest.mark.parametrize("scheme", [Scheme.SCHEME1, Scheme.SCHEME2])
@pytest.mark.parametrize("reference", [43, 44])
def test_projected_ask_cancels_partner(bank100, scheme, reference):
    """Orthogonal ASK axes remove the real-valued leakage of the colliding partner"""
    fqam = FqamConfig(mf=4, mq=4, scheme=scheme)
    projected = self_sir(bank100, reference, SirMode.PROJECTED_ASK, fqam)
    worst = self_sir(bank100, reference, SirMode.FQAM_WORST_CASE, fqam)
    assert projected.gamma_db > 50.0
    assert projected.gamma_db > worst.gamma_db


def test_projected_ask_quarter_turn(bank100):
    """Rotating the ASK axes per subcarrier re-aligns the partner at lag 0"""
    fqam = FqamConfig(mf=4, mq=4, scheme=Scheme.SCHEME1, ask_phase=AskPhase.QUARTER_TURN)
    report = self_sir(bank100, 43, SirMode.PROJECTED_ASK, fqam)
    assert 10.0 < report.gamma_db < 15.0


def test_projected_ask_band_edge_wraps(bank100, fqam_s1):
    report = self_sir(bank100, 99, SirMode.PROJECTED_ASK, fqam_s1)
    assert report.gamma_db > 50.0


def test_projected_ask_rejects(bank100, fqam_s1):
    with pytest.raises(FqamFbmcError):
        self_sir(bank100, 41, SirMode.PROJECTED_ASK, fqam_s1)
    with pytest.raises(ConfigError):
        self_sir(bank100, 43, SirMode.PROJECTED_ASK, FqamConfig(mf=4, mq=4, scheme=Scheme.PLAIN_FQAM))


# ==================== PSD ====================

def test_white_noise_psd_is_flat(rng):
    noise = rng.standard_normal(1 << 14) + 1j * rng.standard_normal(1 << 14)
    curve = signal_psd(noise, segment_length=32, samples_per_symbol=32)
    power = np.asarray(curve.power_db)
    assert power.size == 32
    assert power.min() > -1.5
    assert curve.freq_axis[0] == pytest.approx(-16.0)


def test_psd_needs_two_segments(rng):
    with pytest.raises(InsufficientDataError):
        signal_psd(np.ones(100, dtype=complex), segment_length=64)


def test_single_subcarrier_psd_is_confined(bank16, rng):
    symbols = np.zeros((400, 16), dtype=np.complex128)
    symbols[:, 0] = rng.choice([-1.0, 1.0], 400) + 1j * rng.choice([-1.0, 1.0], 400)
    curve = signal_psd(synthesize_fast(TxFrame(symbols=symbols), bank16), segment_length=256)
    freq, power = np.asarray(curve.freq_axis), np.asarray(curve.power_db)
    assert abs(freq[np.argmax(power)]) < 1.0
    assert power[np.abs(freq) > 3].max() < -40


# ==================== PAPR ====================

def test_constant_envelope_papr_is_zero():
    signal = TimeSignal(samples=np.ones(7 * 8 + 32), num_subcarriers=8, overlap=4, num_symbols=8)
    np.testing.assert_allclose(papr_per_symbol(signal), 0.0, atol=1e-12)


def test_papr_is_scale_free(bank16, rng):
    values = rng.standard_normal((20, 16)) + 1j * rng.standard_normal((20, 16))
    signal = synthesize_fast(TxFrame(symbols=values), bank16)
    scaled = signal.with_samples(-3.7j * np.asarray(signal.samples))
    np.testing.assert_allclose(papr_per_symbol(scaled), papr_per_symbol(signal), atol=1e-9)


def test_ccdf_shape(rng):
    papr = rng.uniform(3.0, 9.0, 5000)
    ccdf = papr_ccdf(papr, min_probability=1e-2)
    probs = np.asarray(ccdf.exceed_prob)
    assert probs[0] == 1.0
    assert probs[-1] == 0.0
    assert np.all(np.diff(probs) <= 0)
    np.testing.assert_allclose(np.diff(ccdf.thresholds), 0.1, atol=1e-9)
    assert ccdf.num_samples == 5000
    assert ccdf_level_crossing(ccdf, 0.5) == pytest.approx(6.0, abs=0.3)


def test_ccdf_needs_enough_symbols(rng):
    with pytest.raises(InsufficientDataError):
        papr_ccdf(rng.uniform(3.0, 9.0, 999), min_probability=1e-2)


def test_compare_papr(rng):
    base = rng.normal(8.0, 1.0, 4000)
    same = compare_papr(base, base, 1e-2, rng)
    assert same.difference_db == 0.0
    assert same.low_db <= 0.0 <= same.high_db

    shifted = compare_papr(base - 0.5, base, 1e-2, rng)
    assert shifted.difference_db == pytest.approx(-0.5, abs=1e-9)
    assert shifted.high_db < 0.0


# ==================== Errors ====================

def test_count_errors():
    record = count_errors([0, 1, 1, 0], [0, 0, 1, 1], snr_db=3.0)
    assert (record.bits_sent, record.bit_errors, record.ber) == (4, 2, 0.5)
    with pytest.raises(DimensionError):
        count_errors([0, 1], [0])


def test_count_errors_complement_and_symmetry(rng):
    tx = rng.integers(0, 2, 1000)
    assert count_errors(tx, 1 - tx).ber == 1.0
    rx = tx.copy()
    rx[::7] ^= 1
    assert count_errors(tx, rx).bit_errors == count_errors(rx, tx).bit_errors == tx[::7].size


def test_wilson_interval():
    low, high = wilson_interval(0, 1000)
    assert low == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < high < 0.01
    low, high = wilson_interval(100, 1000)
    assert low < 0.1 < high
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_horizontal_gap():
    def curve(shift_db):
        records = []
        for snr in range(0, 11):
            ber = 10 ** (-(snr - shift_db) / 2)
            records.append(BerRecord(snr_db=snr, bits_sent=10 ** 12, bit_errors=int(round(10 ** 12 * min(ber, 1.0)))))
        return records

    assert horizontal_gap_db(curve(1.5), curve(0.0), 1e-3) == pytest.approx(1.5, abs=1e-6)
    with pytest.raises(InsufficientDataError):
        horizontal_gap_db(curve(0.0), curve(0.0), 1e-9)
