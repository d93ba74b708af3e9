"""
Exhaustive policy-enumeration oracle for small ExplicitCmdps.

Every deterministic stationary policy is evaluated exactly by one backward
pass over the transient states in order of increasing distance to absorption,
vectorized over blocks of policies.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from cmdp.model import DeterministicPolicy, ExplicitCmdp, validate_model
from config.settings import settings
from utils.constants import Limits, Tolerances
from utils.errors import EnumerationTooLargeError, InfeasibleProblemError, ModelValidationError

logger = logging.getLogger(__name__)


class PolicyIndexer:
    """Mixed-radix numbering of the deterministic policies of a model.

    Policy 0 picks the smallest action everywhere; the first transient state
    is the most significant digit.
    """

    def __init__(self, model: ExplicitCmdp):
        self.model = model
        self.states = model.transient_states()
        self.sizes = [len(model.action_sets[s]) for s in self.states]
        self.count = math.prod(self.sizes)
        strides = []
        stride = 1
        for size in reversed(self.sizes):
            strides.append(stride)
            stride *= size
        self.strides = dict(zip(self.states, reversed(strides)))
        self.size_of = dict(zip(self.states, self.sizes))

    def positions(self, indices: np.ndarray, state: int) -> np.ndarray:
        return (indices // self.strides[state]) % self.size_of[state]

    def policy(self, index: int) -> DeterministicPolicy:
        mapping = {}
        for s in self.states:
            position = (index // self.strides[s]) % self.size_of[s]
            mapping[s] = self.model.action_sets[s][position]
        return DeterministicPolicy(mapping)

    def index_of(self, policy: DeterministicPolicy) -> int:
        index = 0
        for s in self.states:
            index += self.model.action_sets[s].index(policy.action_of(s)) * self.strides[s]
        return index


@dataclass
class FeasiblePolicySet:
    """Lazily materialized set of policies, stored as policy indices"""
    indexer: PolicyIndexer
    indices: np.ndarray

    def __len__(self):
        return int(self.indices.size)

    def __iter__(self) -> Iterator[DeterministicPolicy]:
        for index in self.indices:
            yield self.indexer.policy(int(index))

    def __contains__(self, policy) -> bool:
        if not isinstance(policy, DeterministicPolicy):
            return False
        index = self.indexer.index_of(policy)
        position = np.searchsorted(self.indices, index)
        return position < self.indices.size and self.indices[position] == index


@dataclass
class BruteForceResult:
    feasibility_value: float
    feasible: bool
    feasible_policy_set: FeasiblePolicySet
    policy_count: int
    min_constraint_cost: Dict[int, float]
    optimal_value: Optional[float] = None
    optimal_policy: Optional[DeterministicPolicy] = None
    refined_value: Optional[float] = None
    refined_policy: Optional[DeterministicPolicy] = None
    values: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def _evaluate_block(model: ExplicitCmdp, indexer: PolicyIndexer, order: List[int],
                    indices: np.ndarray):
    """Exact expected totals from every state for a block of policies"""
    P = model.transition_matrix
    offsets = model.pair_offsets
    cost = np.zeros((indices.size, model.state_count))
    revenue = np.zeros((indices.size, model.state_count))

    for s in order:
        rows = offsets[s] + indexer.positions(indices, s)
        block = P[rows]
        cost[:, s] = model.cost_vector[rows] + np.asarray(block.multiply(cost).sum(axis=1)).ravel()
        revenue[:, s] = model.reward_vector[rows] + np.asarray(block.multiply(revenue).sum(axis=1)).ravel()

    return cost, revenue


def _minimal_costs(model: ExplicitCmdp, order: List[int]) -> np.ndarray:
    """Smallest expected constraint cost any policy achieves from each state"""
    P = model.transition_matrix
    offsets = model.pair_offsets
    min_cost = np.zeros(model.state_count)
    for s in order:
        rows = slice(offsets[s], offsets[s + 1])
        min_cost[s] = float(np.min(model.cost_vector[rows] + P[rows] @ min_cost))
    return min_cost


def brute_force_solve(model: ExplicitCmdp, limit: Optional[int] = None,
                      tol: float = Tolerances.FEASIBILITY,
                      raise_on_infeasible: bool = True) -> BruteForceResult:
    """Enumerate every deterministic policy and solve the constrained problem exactly.

    ``optimal_value`` maximizes expected revenue over all policies whose
    expected constraint cost is at most 0. ``refined_value`` maximizes over the
    narrower class of policies that minimize the expected constraint cost from
    every transient state at once, which is the class the two-phase dynamic
    program optimizes over.
    """
    report = validate_model(model)
    if report:
        raise ModelValidationError("; ".join(report))

    limit = limit or settings.BRUTE_FORCE_LIMIT
    indexer = PolicyIndexer(model)
    if indexer.count > limit:
        raise EnumerationTooLargeError("deterministic policies", indexer.count, limit)

    x0 = model.initial_state()
    order = sorted(indexer.states, key=lambda s: model.steps_to_absorption[s])
    transient = np.array(indexer.states, dtype=np.int64)
    logger.debug(f"Enumerating {indexer.count} policies over {transient.size} transient states")

    block_size = Limits.BRUTE_FORCE_BLOCK
    x0_cost = np.empty(indexer.count)
    x0_revenue = np.empty(indexer.count)
    min_cost = _minimal_costs(model, order)
    # policies minimizing the constraint cost from every transient state
    refined = np.zeros(indexer.count, dtype=bool)

    for start in range(0, indexer.count, block_size):
        indices = np.arange(start, min(start + block_size, indexer.count), dtype=np.int64)
        cost, revenue = _evaluate_block(model, indexer, order, indices)
        x0_cost[indices] = cost[:, x0]
        x0_revenue[indices] = revenue[:, x0]
        refined[indices] = np.all(cost[:, transient] <= min_cost[transient] + tol, axis=1)

    best_cost = float(x0_cost.min())
    feasibility_value = max(0.0, best_cost)
    feasible_indices = np.flatnonzero(x0_cost <= tol)
    result = BruteForceResult(
        feasibility_value=feasibility_value,
        feasible=feasibility_value <= tol,
        feasible_policy_set=FeasiblePolicySet(indexer, feasible_indices),
        policy_count=indexer.count,
        min_constraint_cost={int(s): float(min_cost[s]) for s in range(model.state_count)},
        values={"constraint": x0_cost, "reward": x0_revenue},
    )

    if not result.feasible:
        logger.info(f"Brute force: infeasible, feasibility value {feasibility_value:.6g}")
        if raise_on_infeasible:
            raise InfeasibleProblemError(feasibility_value)
        return result

    feasible_revenue = x0_revenue[feasible_indices]
    best = int(feasible_indices[int(np.argmax(feasible_revenue))])
    result.optimal_value = float(x0_revenue[best])
    result.optimal_policy = indexer.policy(best)

    refined_indices = np.flatnonzero(refined)
    best_refined = int(refined_indices[int(np.argmax(x0_revenue[refined_indices]))])
    result.refined_value = float(x0_revenue[best_refined])
    result.refined_policy = indexer.policy(best_refined)

    logger.debug(f"Brute force: optimum {result.optimal_value:.6g}, refined optimum {result.refined_value:.6g}, "
                 f"{len(feasible_indices)} feasible policies")
    return result
