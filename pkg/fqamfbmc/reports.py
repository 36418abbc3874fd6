"""
CSV emission. Each file opens with '#' provenance lines followed by the
header row; numbers use '.' decimals and lines end with LF.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from .harness import ComparisonRow, RateRow, SirRow
from .models import PaprCcdf, PsdCurve
from .schemas import Provenance, SweepResult

logger = logging.getLogger(__name__)

BER_HEADER = ["snr_db", "bits", "errors", "ber"]
PSD_HEADER = ["freq_over_df", "power_db"]
PAPR_HEADER = ["papr_db", "ccdf"]
SELFSIR_HEADER = ["label", "mode", "p_s", "p_i", "gamma_db", "p_intra", "gamma_total_db"]
RATE_HEADER = ["mf", "mq", "scheme", "r_formula", "r_empirical", "loss_fraction"]
COMPARE_HEADER = ["label", "banks", "mults_per_symbol", "gamma_db", "first_sidelobe_db"]


def fmt(value: float) -> str:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.10g}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], meta: Provenance) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in meta.model_dump().items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {path}")
    return path


def write_ber(results: Iterable[SweepResult], out_dir: Path) -> List[Path]:
    paths = []
    for result in results:
        rows = [[fmt(r.snr_db), r.bits_sent, r.bit_errors, fmt(r.ber)] for r in result.records]
        paths.append(write_csv(Path(out_dir) / f"ber_{result.label}.csv", BER_HEADER, rows, result.provenance))
    return paths


def write_selfsir(rows: Iterable[SirRow], out_dir: Path, meta: Provenance) -> Path:
    body = [
        [row.label, row.report.mode.value, fmt(row.report.p_signal), fmt(row.report.p_interference),
         fmt(row.report.gamma_db), fmt(row.report.p_intra_group), fmt(row.report.gamma_total_db)]
        for row in rows
    ]
    return write_csv(Path(out_dir) / "selfsir.csv", SELFSIR_HEADER, body, meta)


def write_psd(curves: Dict[str, PsdCurve], out_dir: Path, meta: Provenance) -> List[Path]:
    paths = []
    for name, curve in curves.items():
        rows = [[fmt(f), fmt(p)] for f, p in zip(curve.freq_axis, curve.power_db)]
        paths.append(write_csv(Path(out_dir) / f"psd_{name}.csv", PSD_HEADER, rows, meta))
    return paths


def write_papr(curves: Dict[str, PaprCcdf], out_dir: Path, meta: Provenance) -> List[Path]:
    paths = []
    for name, ccdf in curves.items():
        rows = [[fmt(t), fmt(p)] for t, p in zip(ccdf.thresholds, ccdf.exceed_prob)]
        paths.append(write_csv(Path(out_dir) / f"papr_{name}.csv", PAPR_HEADER, rows, meta))
    return paths


def write_rate(rows: Iterable[RateRow], out_dir: Path, meta: Provenance) -> Path:
    body = [
        [row.report.mf, row.report.mq, row.report.scheme.value, fmt(row.report.r_bits_per_symbol),
         fmt(row.r_empirical), fmt(row.report.r_loss_fraction)]
        for row in rows
    ]
    return write_csv(Path(out_dir) / "rate.csv", RATE_HEADER, body, meta)


def write_comparison(rows: Iterable[ComparisonRow], out_dir: Path, meta: Provenance) -> Path:
    body = [
        [row.label, row.banks, fmt(row.mults_per_symbol), fmt(row.gamma_db), fmt(row.first_sidelobe_db)]
        for row in rows
    ]
    return write_csv(Path(out_dir) / "compare.csv", COMPARE_HEADER, body, meta)
