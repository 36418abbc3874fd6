import argparse
import json

from ..schemas import ExperimentConfig


def handle(args: argparse.Namespace) -> int:
    """Print the experiment document JSON schema"""
    print(json.dumps(ExperimentConfig.model_json_schema(), indent=2, sort_keys=True))
    return 0


def register(subparsers) -> None:
    parser = subparsers.add_parser("schema", help="print the experiment config JSON schema")
    parser.set_defaults(func=handle)
