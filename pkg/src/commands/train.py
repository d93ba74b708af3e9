"""
train: run a learning algorithm and write its curves, comparison row and table snapshots
"""

import argparse
import logging

from bench.runner import run
from commands import add_algorithm_argument, add_campaign_arguments, plan_from_args
from utils.constants import Algorithms, Emojis, ExitCodes

logger = logging.getLogger(__name__)

LEARNERS = tuple(a for a in Algorithms.ALL if a not in (Algorithms.DP, Algorithms.GREEDY))


def handle(args: argparse.Namespace) -> int:
    result = run(plan_from_args(args, args.algo))
    row = result.row
    print(f"{row.algorithm}: reward {row.mean_reward:.6g} ± {row.reward_se:.3g}, "
          f"constraint {row.mean_constraint:.6g} ± {row.constraint_se:.3g}, "
          f"{'feasible' if row.feasible else 'infeasible'}, {row.updates} updates")
    for name, path in sorted(result.paths.items()):
        print(f"{Emojis.FILE} {name}: {path}")
    return ExitCodes.SUCCESS


def setup(registry) -> None:
    parser = registry.add("train", handle, "train a learner and evaluate its final policy")
    add_campaign_arguments(parser)
    add_algorithm_argument(parser, choices=LEARNERS)
