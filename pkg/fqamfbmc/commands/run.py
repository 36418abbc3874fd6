import argparse
import logging

from ..schemas import ReportKind
from . import ber, common_options, compare, load_experiment, output_dir, papr, psd, rate, selfsir

logger = logging.getLogger(__name__)

EMITTERS = {
    ReportKind.BER: ber.emit,
    ReportKind.SELFSIR: selfsir.emit,
    ReportKind.PSD: psd.emit,
    ReportKind.PAPR: papr.emit,
    ReportKind.RATE: rate.emit,
    ReportKind.COMPARE: compare.emit,
}


def handle(args: argparse.Namespace) -> int:
    """Every report listed in outputs.reports, into one directory"""
    config = load_experiment(args)
    out_dir = output_dir(args, config)
    for kind in config.outputs.reports:
        logger.info(f"Report: {kind.value}")
        EMITTERS[kind](config, out_dir, args.workers)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "run", parents=[common_options()], help="emit the reports listed in outputs.reports"
    )
    parser.set_defaults(func=handle)
