import argparse
import logging
from pathlib import Path

from ..exceptions import ConfigError
from ..harness import run_ber_sweep
from ..reports import write_ber
from ..schemas import ExperimentConfig
from . import common_options, load_experiment, output_dir

logger = logging.getLogger(__name__)


def emit(config: ExperimentConfig, out_dir: Path, workers: int) -> None:
    """BER sweep per configured scheme (and oracle curves when enabled)"""
    if workers < 1:
        raise ConfigError("must be at least 1", "--workers")
    write_ber(run_ber_sweep(config, workers=workers), out_dir)


def handle(args: argparse.Namespace) -> int:
    config = load_experiment(args)
    emit(config, output_dir(args, config), args.workers)
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("ber", parents=[common_options()], help="uncoded BER sweep")
    parser.set_defaults(func=handle)
