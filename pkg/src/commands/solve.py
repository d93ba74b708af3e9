"""
solve: exact two-phase dynamic programming on a scenario or an explicit model file
"""

import argparse
import logging
from pathlib import Path

from bench.runner import run
from cmdp.brute_force import brute_force_solve
from cmdp.io import read_model
from commands import add_campaign_arguments, plan_from_args
from oracle.report import write_report
from oracle.two_phase_dp import solve_two_phase
from utils.constants import Algorithms, Emojis, ExitCodes
from utils.errors import InfeasibleProblemError, PreconditionError

logger = logging.getLogger(__name__)


def solve_model_file(args: argparse.Namespace) -> int:
    model = read_model(args.model)
    report = solve_two_phase(model)
    path = write_report(report, args.out / "solve-report.txt")
    print(f"{Emojis.FILE} {path}")

    if args.brute_force:
        exact = brute_force_solve(model, raise_on_infeasible=False)
        print(f"brute force: feasibility {exact.feasibility_value:.10g}, optimum {exact.optimal_value}, "
              f"refined optimum {exact.refined_value}")

    if not report.verdict.feasible:
        raise InfeasibleProblemError(report.verdict.magnitude)
    print(f"V*(x0) = {report.verdict.value_at_origin:.10g}")
    print(f"W*(x0) = {report.revenue.w_star[model.initial_state()]:.10g}")
    return ExitCodes.SUCCESS


def handle(args: argparse.Namespace) -> int:
    if (args.model is None) == (args.scenario is None):
        raise PreconditionError("solve needs exactly one of --scenario and --model")
    if args.model is not None:
        return solve_model_file(args)

    result = run(plan_from_args(args, Algorithms.DP))
    row = result.row
    print(f"dp: reward {row.mean_reward:.6g} ± {row.reward_se:.3g}, exact W*(x0) {row.exact_value:.10g}")
    return ExitCodes.SUCCESS


def setup(registry) -> None:
    parser = registry.add("solve", handle, "exact two-phase DP (the dp algorithm)")
    add_campaign_arguments(parser, scenario_required=False)
    parser.add_argument("--model", type=Path, default=None,
                        help="explicit CMDP text file instead of a scenario")
    parser.add_argument("--brute-force", action="store_true",
                        help="with --model, also enumerate every deterministic policy")
