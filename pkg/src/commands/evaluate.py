"""
evaluate: Monte Carlo evaluation of one algorithm's policy, printed as a comparison row
"""

import argparse
import logging

from bench.runner import execute, rows_frame
from commands import add_algorithm_argument, add_campaign_arguments, plan_from_args
from utils.constants import ExitCodes

logger = logging.getLogger(__name__)


def handle(args: argparse.Namespace) -> int:
    result = execute(plan_from_args(args, args.algo))
    frame = rows_frame([result.row])
    if args.csv:
        print(frame.to_csv(index=False, na_rep=""), end="")
    else:
        print(frame.to_string(index=False, na_rep=""))
    return ExitCodes.SUCCESS


def setup(registry) -> None:
    parser = registry.add("evaluate", handle, "evaluate one algorithm without writing artifacts")
    add_campaign_arguments(parser)
    add_algorithm_argument(parser)
    parser.add_argument("--csv", action="store_true", help="print the row as CSV")
