import argparse
from pathlib import Path

from ..harness import provenance, run_papr_export
from ..reports import write_papr
from ..schemas import ExperimentConfig
from . import common_options, load_experiment, output_dir


def emit(config: ExperimentConfig, out_dir: Path, workers: int) -> None:
    write_papr(run_papr_export(config), out_dir, provenance(config))


def handle(args: argparse.Namespace) -> int:
    config = load_experiment(args)
    emit(config, output_dir(args, config), args.workers)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("papr", parents=[common_options()], help="per-symbol PAPR CCDF")
    parser.set_defaults(func=handle)
