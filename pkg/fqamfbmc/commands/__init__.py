"""
CLI subcommands. Each module exposes register(subparsers), which adds its
parser and binds a handler returning the process exit code.
"""
import argparse
import logging
from pathlib import Path
from typing import Optional

from ..config import settings
from ..schemas import ExperimentConfig

logger = logging.getLogger(__name__)


def common_options() -> argparse.ArgumentParser:
    """Options shared by every experiment subcommand"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="experiment JSON document (defaults apply when omitted)")
    parent.add_argument("--out", type=Path, help="output directory for CSV files")
    parent.add_argument("--seed", type=int, help="master seed, overrides channel.seed")
    parent.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS, help="worker processes")
    return parent


def load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    config = config.with_seed(args.seed)
    logger.info(f"Experiment {config.config_hash()[:12]} (seed {config.channel.seed})")
    return config


def output_dir(args: argparse.Namespace, config: ExperimentConfig) -> Path:
    chosen: Optional[Path] = args.out
    if chosen is None:
        chosen = Path(config.outputs.directory or settings.OUTPUT_DIR)
    chosen.mkdir(parents=True, exist_ok=True)
    return chosen
