import argparse
import logging
import sys
from typing import List, Optional

from . import __version__
from .commands import ber, compare, papr, psd, rate, run, schema, selfsir
from .config import settings
from .exceptions import FqamFbmcError

logger = logging.getLogger(__name__)

EXIT_RUNTIME = 3


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format=settings.LOG_FORMAT,
        stream=sys.stderr,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fqamfbmc",
        description="FQAM-FBMC link-level simulation: BER, self-SIR, PSD, PAPR and rate experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # Include subcommands
    for command in (ber, selfsir, psd, papr, rate, compare, run, schema):
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one subcommand and map failures to exit codes"""
    args = build_parser().parse_args(argv)
    configure_logging()
    logger.info(f"Starting fqamfbmc {__version__}: {args.command}")
    try:
        return args.func(args)
    except FqamFbmcError as e:
        logger.error(f"{type(e).__name__}: {e}")
        logger.debug("Traceback", exc_info=True)
        return e.exit_code
    except Exception as e:
        logger.error(f"Global exception: {e}", exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
