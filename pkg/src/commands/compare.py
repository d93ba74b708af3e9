"""
compare: run several algorithms on one scenario and write a sorted comparison table
"""

import argparse
import logging

from bench.runner import compare, rows_frame
from commands import add_algorithm_argument, add_campaign_arguments, plan_from_args
from utils.constants import Emojis, ExitCodes
from utils.errors import PreconditionError

logger = logging.getLogger(__name__)


def handle(args: argparse.Namespace) -> int:
    algorithms = list(dict.fromkeys(args.algo))
    if len(algorithms) < 2:
        raise PreconditionError("compare needs at least two distinct --algo tokens")

    plans = [plan_from_args(args, algorithm) for algorithm in algorithms]
    path, rows = compare(plans, args.out / "comparison.csv")
    print(rows_frame(rows).to_string(index=False, na_rep=""))
    print(f"{Emojis.FILE} {path}")
    return ExitCodes.SUCCESS


def setup(registry) -> None:
    parser = registry.add("compare", handle, "paired comparison of several algorithms")
    add_campaign_arguments(parser)
    add_algorithm_argument(parser, repeatable=True)
