"""
Greedy assignment: rent out as many vehicles as possible.

Each station serves its bids best rank first, profitable requests before
rebalancing ones, until it runs out of idle vehicles or bids. No lookahead and
no notion of the utilization constraint.
"""

import logging
from typing import List, Optional, Sequence

from cmdp.rng import RngStream
from cmdp.simulate import EvaluationResult, mc_evaluate
from rideshare.bids import RentalBid, rank_value
from rideshare.environment import VehicleSharingModel, bid_aware_trajectory
from rideshare.fleet import DispatchDecision, FleetState
from rideshare.scenario import Scenario

logger = logging.getLogger(__name__)


def greedy_policy(fleet: FleetState, bids: Sequence[Sequence[RentalBid]],
                  scenario: Optional[Scenario] = None) -> DispatchDecision:
    """Dispatch decision built from the realized bids at every station"""
    stations = len(bids)
    idle = fleet.idle_counts(stations)
    counts: List[List[int]] = [[0] * stations for _ in range(stations)]

    for j in range(1, stations + 1):
        ranked = []
        for i, bid in enumerate(bids[j - 1]):
            weight = scenario.rank_weight(bid.destination, fleet.k) if scenario is not None else 1.0
            value = rank_value(bid, bid.destination, weight)
            if bid.fare > 0 or (bid.fare < 0 and bid.destination != j):
                ranked.append((bid.fare < 0, -value, -bid.fare, bid.duration, i, bid))
        ranked.sort(key=lambda entry: entry[:5])

        available = idle[j - 1]
        for *_, bid in ranked:
            if available == 0:
                break
            if bid.destination != j:
                counts[j - 1][bid.destination - 1] += 1
            available -= 1
        counts[j - 1][j - 1] = idle[j - 1] - sum(counts[j - 1][k] for k in range(stations) if k != j - 1)

    return DispatchDecision(tuple(tuple(row) for row in counts))


def evaluate_greedy(model: VehicleSharingModel, trials: int, rng: RngStream,
                    workers: Optional[int] = None) -> EvaluationResult:
    result = mc_evaluate(model, greedy_policy, trials, rng, workers, rollout=bid_aware_trajectory)
    logger.info(f"📊 Greedy: reward {result.mean_total_reward:.6g} ± {result.reward_se:.3g}, "
                f"constraint {result.mean_total_constraint:.6g} ± {result.constraint_se:.3g}")
    return result
