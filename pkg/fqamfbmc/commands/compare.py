import argparse
from pathlib import Path

from ..harness import provenance, run_comparison
from ..reports import write_comparison
from ..schemas import ExperimentConfig
from . import common_options, load_experiment, output_dir


def emit(config: ExperimentConfig, out_dir: Path, workers: int) -> None:
    write_comparison(run_comparison(config), out_dir, provenance(config))


def handle(args: argparse.Namespace) -> int:
    config = load_experiment(args)
    emit(config, output_dir(args, config), args.workers)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "compare", parents=[common_options()], help="complexity, self-SIR and side-lobe per waveform"
    )
    parser.set_defaults(func=handle)
