"""
Scalarized Q-learning: the unconstrained baseline and the penalized variant
that learns on R - w*D, plus the grid search over the penalty weight.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, List, Optional, Sequence, Tuple

from cmdp.model import SampledModel
from cmdp.rng import RngStream
from cmdp.simulate import EvaluationResult, mc_evaluate
from config.settings import settings
from learning.config import LearnerConfig
from learning.learning_log import CheckpointRecorder, LearningLog
from learning.qpair import LazyTable
from learning.schedule import step_sizes
from oracle.two_phase_dp import argmax_smallest
from utils.constants import Streams
from utils.errors import ModelValidationError, PolicyUndefinedError
from utils.validators import validate_range

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PenaltyConfig:
    penalty_weight: float = 0.0

    def __post_init__(self):
        validate_range(self.penalty_weight, "penalty_weight", 0.0, math.inf)


class TablePolicy:
    """Greedy policy over a frozen table; near-ties go to the smallest action key"""

    def __init__(self, model: SampledModel, score: Callable[[Hashable, Hashable], float],
                 tie_tol: Optional[float] = None):
        self.model = model
        self.score = score
        self.tie_tol = tie_tol

    def action_of(self, state: Hashable) -> Hashable:
        if self.model.is_absorbing(state):
            raise PolicyUndefinedError(state)
        values = {u: self.score(state, u) for u in self.model.admissible_actions(state)}
        if self.tie_tol is None:
            return argmax_smallest(values)
        return argmax_smallest(values, self.tie_tol)

    def __call__(self, state: Hashable) -> Hashable:
        return self.action_of(state)


@dataclass
class BaselineResult:
    h_table: LazyTable
    policy: Any
    log: LearningLog
    multiplier_trace: List[float] = field(default_factory=list)

    def __iter__(self):
        yield self.h_table
        yield self.policy


def epsilon_greedy(table: LazyTable, state: Hashable, actions: Sequence[Hashable],
                   epsilon: float, rng: RngStream) -> Hashable:
    if rng.random() < epsilon:
        return actions[rng.integers(len(actions))]
    return argmax_smallest({u: table.get(state, u) for u in actions})


def sampled_reward(model: SampledModel, state: Hashable, action: Hashable,
                   samples: List[Tuple[Hashable, float]]) -> float:
    """R(x,u) when the model knows it, otherwise the mean realized reward"""
    reward = model.expected_reward(state, action)
    if reward is None:
        reward = math.fsum(r for _, r in samples) / len(samples)
    return reward


def _max_value(model: SampledModel, table: LazyTable, state: Hashable) -> float:
    if model.is_absorbing(state):
        return 0.0
    return max(table.get(state, u) for u in model.admissible_actions(state))


def _train_scalarized(model: SampledModel, weight: float, config: LearnerConfig, rng: RngStream,
                      reference=None) -> BaselineResult:
    table = LazyTable()
    recorder = CheckpointRecorder(model, config, rng, reference)
    n = config.schedule.sample_batch_N
    updates = 0

    for episode in range(1, config.max_episodes + 1):
        state = model.initial_state()
        steps = 0
        while not model.is_absorbing(state):
            if steps >= model.horizon_T:
                raise ModelValidationError(f"episode exceeded horizon_T={model.horizon_T}")
            actions = model.admissible_actions(state)
            action = epsilon_greedy(table, state, actions, config.exploration_epsilon, rng)
            samples = model.sample_successors(state, action, rng, n)
            utility = (sampled_reward(model, state, action, samples)
                       - weight * model.constraint_cost(state, action))
            target = utility + math.fsum(_max_value(model, table, nxt) for nxt, _ in samples) / n
            _, zeta2 = step_sizes(table.visits(state, action), config.schedule)
            table.update(state, action, target, zeta2)
            state = samples[0][0]
            steps += 1
            updates += 1
        recorder.log.episode_lengths.append(steps)

        if recorder.due(episode):
            frozen = table.snapshot()
            recorder.record(TablePolicy(model, frozen.get), episode, updates, h_lookup=frozen.get)

    return BaselineResult(table, TablePolicy(model, table.snapshot().get), recorder.log)


def train_vanilla_q(model: SampledModel, config: LearnerConfig, rng: RngStream,
                    reference=None) -> BaselineResult:
    """Asynchronous Q-learning on revenue alone over every admissible action"""
    result = _train_scalarized(model, 0.0, config, rng, reference)
    logger.info(f"✅ Vanilla Q-learning done: {len(result.h_table)} pairs visited")
    return result


def train_penalized_q(model: SampledModel, penalty: PenaltyConfig, config: LearnerConfig,
                      rng: RngStream, reference=None) -> BaselineResult:
    """Vanilla Q-learning on the per-step utility R - penalty_weight * D"""
    result = _train_scalarized(model, penalty.penalty_weight, config, rng, reference)
    logger.info(f"✅ Penalized Q-learning (weight {penalty.penalty_weight:g}) done: "
                f"{len(result.h_table)} pairs visited")
    return result


@dataclass
class GridSearchResult:
    best: PenaltyConfig
    feasible: bool
    result: BaselineResult
    evaluations: List[Tuple[float, EvaluationResult]]


def grid_search_penalty(model: SampledModel, weights: Sequence[float], config: LearnerConfig,
                        rng: RngStream, trials: Optional[int] = None,
                        slack_se: float = 2.0) -> GridSearchResult:
    """Train one penalized learner per weight and keep the best one that stays feasible.

    Weight i trains on ``rng.spawn(i)``; every weight is evaluated on the same
    evaluation streams. Feasible means a mean constraint within ``slack_se``
    standard errors of zero. Among feasible weights the highest mean reward
    wins (ties go to the earlier weight); when none is feasible the weight
    with the smallest mean violation is returned and flagged infeasible.
    """
    if not weights:
        raise ValueError("grid_search_penalty needs at least one weight")
    trials = trials or settings.DEFAULT_TRIALS
    eval_rng = RngStream(rng.seed, Streams.GRID)

    results, evaluations = [], []
    for i, weight in enumerate(weights):
        penalty = PenaltyConfig(float(weight))
        trained = train_penalized_q(model, penalty, config, rng.spawn(i))
        evaluation = mc_evaluate(model, trained.policy, trials, eval_rng)
        results.append(trained)
        evaluations.append((penalty.penalty_weight, evaluation))
        logger.debug(f"Weight {weight:g}: reward {evaluation.mean_total_reward:.6g}, "
                     f"constraint {evaluation.mean_total_constraint:.6g}")

    feasible = [i for i, (_, ev) in enumerate(evaluations) if ev.is_feasible(slack_se)]
    if feasible:
        best = max(feasible, key=lambda i: (evaluations[i][1].mean_total_reward, -i))
    else:
        best = min(range(len(evaluations)), key=lambda i: (evaluations[i][1].mean_total_constraint, i))
        logger.warning(f"⚠️ No penalty weight is feasible; keeping weight {evaluations[best][0]:g}")

    logger.info(f"📊 Grid search picked penalty weight {evaluations[best][0]:g}")
    return GridSearchResult(PenaltyConfig(evaluations[best][0]), bool(feasible), results[best], evaluations)
