import logging
import math
import re
from pathlib import Path
from typing import Callable, Dict, Union

import numpy as np

from .config import settings
from .exceptions import ConfigError, FilterFileError
from .models import PrototypeFilter, PsdCurve

logger = logging.getLogger(__name__)

# Frequency-sampling coefficients of the four-term PHYDYAS design. H1 and H3
# are the closed-form roots of H1 + H3 = (1 + sqrt 2) / 2 and H1^2 + H3^2 = 1,
# which round to the tabulated 0.971960 / 0.235147.
_H2 = 1 / math.sqrt(2)
_H_SUM = (1 + math.sqrt(2)) / 2
_H_SPREAD = math.sqrt(2 - _H_SUM ** 2)
PHYDYAS_COEFFS = (1.0, (_H_SUM + _H_SPREAD) / 2, _H2, (_H_SUM - _H_SPREAD) / 2)

_HEADER = re.compile(r"^M=(\d+)\s+L=(\d+)$")
_PSD_FLOOR = 1e-30


def _unit_energy(coeffs: np.ndarray) -> np.ndarray:
    energy = float(np.sum(coeffs ** 2))
    if energy <= 0 or not math.isfinite(energy):
        raise FilterFileError("zero-energy filter cannot be normalized")
    return coeffs / math.sqrt(energy)


def phydyas(num_subcarriers: int, overlap: int = 4, normalize: bool = True) -> PrototypeFilter:
    """
    PHYDYAS prototype filter by frequency sampling

    Args:
        num_subcarriers: M, at least 2
        overlap: L, only the four-term design (L=4) is available
        normalize: scale to unit energy (disable to inspect the raw design)

    Returns:
        PrototypeFilter of length L*M
    """
    if overlap != 4:
        raise ConfigError(f"PHYDYAS design only covers overlap factor 4, got {overlap}", "overlap")
    if num_subcarriers < 2:
        raise ConfigError(f"need at least 2 subcarriers, got {num_subcarriers}", "m_total")

    length = overlap * num_subcarriers
    n = np.arange(length)
    coeffs = np.full(length, PHYDYAS_COEFFS[0])
    for k in range(1, overlap):
        coeffs += 2 * (-1) ** k * PHYDYAS_COEFFS[k] * np.cos(2 * np.pi * k * n / length)

    if normalize:
        coeffs = _unit_energy(coeffs)
    return PrototypeFilter(coeffs=coeffs, overlap=overlap, num_subcarriers=num_subcarriers, label="phydyas")


def _row_column(coeffs: np.ndarray, overlap: int, num_subcarriers: int) -> np.ndarray:
    # write row-wise into L x M, read column-wise
    return coeffs.reshape(overlap, num_subcarriers).T.reshape(-1)


def _row_column_inverse(coeffs: np.ndarray, overlap: int, num_subcarriers: int) -> np.ndarray:
    return coeffs.reshape(num_subcarriers, overlap).T.reshape(-1)


INTERLEAVERS: Dict[str, Callable[[np.ndarray, int, int], np.ndarray]] = {
    "row-column": _row_column,
}
DEINTERLEAVERS: Dict[str, Callable[[np.ndarray, int, int], np.ndarray]] = {
    "row-column": _row_column_inverse,
}


def block_interleave(f: PrototypeFilter, strategy: str = "row-column") -> PrototypeFilter:
    """Block-interleaved variant of a prototype filter (a permutation of its taps)"""
    try:
        permute = INTERLEAVERS[strategy]
    except KeyError:
        raise ConfigError(f"unknown interleaver '{strategy}'", "interleaver")
    coeffs = permute(np.asarray(f.coeffs), f.overlap, f.num_subcarriers)
    return PrototypeFilter(
        coeffs=coeffs,
        overlap=f.overlap,
        num_subcarriers=f.num_subcarriers,
        label=f"{f.label}-interleaved",
    )


def deinterleave(f: PrototypeFilter, strategy: str = "row-column") -> PrototypeFilter:
    try:
        permute = DEINTERLEAVERS[strategy]
    except KeyError:
        raise ConfigError(f"unknown interleaver '{strategy}'", "interleaver")
    label = f.label[: -len("-interleaved")] if f.label.endswith("-interleaved") else f.label
    coeffs = permute(np.asarray(f.coeffs), f.overlap, f.num_subcarriers)
    return PrototypeFilter(coeffs=coeffs, overlap=f.overlap, num_subcarriers=f.num_subcarriers, label=label)


def save_filter(f: PrototypeFilter, path: Union[str, Path]) -> Path:
    """Write the plain-text coefficient format: header line, then one value per line"""
    path = Path(path)
    lines = [f"M={f.num_subcarriers} L={f.overlap}"]
    lines.extend(repr(float(c)) for c in f.coeffs)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Saved {f.label} filter ({f.length} taps) to {path}")
    return path


def load_filter(path: Union[str, Path]) -> PrototypeFilter:
    """
    Load a coefficient file and normalize it to unit energy

    Args:
        path: file with header "M=<int> L=<int>" followed by exactly L*M values

    Returns:
        PrototypeFilter labelled with the file stem
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FilterFileError(f"cannot read filter file {path}: {e}") from e

    lines = [line.strip() for line in lines if line.strip()]
    if not lines:
        raise FilterFileError(f"{path}: empty filter file")
    match = _HEADER.match(lines[0])
    if match is None:
        raise FilterFileError(f"{path}: malformed header '{lines[0]}', expected 'M=<int> L=<int>'")
    num_subcarriers, overlap = int(match.group(1)), int(match.group(2))
    if num_subcarriers < 2 or overlap < 2:
        raise FilterFileError(f"{path}: M and L must both be at least 2")

    values = lines[1:]
    expected = num_subcarriers * overlap
    if len(values) != expected:
        raise FilterFileError(f"{path}: expected {expected} coefficients for M={num_subcarriers} L={overlap}, got {len(values)}")
    try:
        coeffs = np.array([float(v) for v in values])
    except ValueError as e:
        raise FilterFileError(f"{path}: {e}") from e
    if not np.all(np.isfinite(coeffs)):
        raise FilterFileError(f"{path}: non-finite coefficient")

    energy = float(np.sum(coeffs ** 2))
    if energy > 0 and abs(energy - 1) > 1e-9:
        logger.warning(f"{path}: filter energy {energy:.6g} rescaled to 1")
    coeffs = _unit_energy(coeffs)
    return PrototypeFilter(coeffs=coeffs, overlap=overlap, num_subcarriers=num_subcarriers, label=path.stem)


def resolve_filter(name: str, num_subcarriers: int, overlap: int) -> PrototypeFilter:
    """Built-in filter by name, otherwise a coefficient file (searched in FILTER_DIR too)"""
    if name == "phydyas":
        return phydyas(num_subcarriers, overlap)
    if name == "phydyas-interleaved":
        return block_interleave(phydyas(num_subcarriers, overlap))

    path = Path(name)
    if not path.is_absolute() and not path.exists():
        path = Path(settings.FILTER_DIR) / name
    f = load_filter(path)
    if (f.num_subcarriers, f.overlap) != (num_subcarriers, overlap):
        raise FilterFileError(
            f"{path}: file describes M={f.num_subcarriers} L={f.overlap}, "
            f"waveform needs M={num_subcarriers} L={overlap}"
        )
    return f


def filter_psd(f: PrototypeFilter, oversample: int = 8) -> PsdCurve:
    """
    Magnitude-squared response of the zero-padded filter on oversample*L*M points

    The axis is in multiples of the subcarrier spacing and is mirrored from the
    non-negative half, so the curve of a real filter is exactly symmetric.
    """
    if oversample < 4:
        raise ConfigError(f"oversample must be at least 4, got {oversample}", "oversample")
    size = oversample * f.length
    half = size // 2
    power = np.abs(np.fft.rfft(f.coeffs, n=size)) ** 2
    power = np.concatenate([power[half - 1:0:-1], power[:half]])
    bins = np.arange(-(half - 1), half)

    power_db = 10 * np.log10(np.maximum(power / power.max(), _PSD_FLOOR))
    return PsdCurve(freq_axis=bins / (oversample * f.overlap), power_db=power_db)


def first_sidelobe_db(curve: PsdCurve) -> float:
    """Level of the first local maximum past the first null on the positive side"""
    positive = curve.freq_axis >= 0
    power = curve.power_db[positive]
    i = int(np.argmax(power))
    while i + 1 < power.size and power[i + 1] <= power[i]:
        i += 1
    while i + 1 < power.size and power[i + 1] >= power[i]:
        i += 1
    return float(power[i])
