"""
Trajectory sampling and Monte Carlo policy evaluation
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from cmdp.model import SampledModel, Step, Trajectory
from cmdp.rng import RngStream
from config.settings import settings
from utils.errors import ModelValidationError
from utils.helpers import chunks, mean_and_standard_error
from utils.validators import validate_positive_int

logger = logging.getLogger(__name__)

PolicyFn = Callable[[Hashable], Hashable]


def _policy_fn(policy) -> PolicyFn:
    return policy.action_of if hasattr(policy, "action_of") else policy


def sample_trajectory(model: SampledModel, policy, rng: RngStream) -> Trajectory:
    """Roll the policy out from the initial state until absorption"""
    act = _policy_fn(policy)
    state = model.initial_state()
    steps: List[Step] = []

    while not model.is_absorbing(state):
        if len(steps) >= model.horizon_T:
            raise ModelValidationError(f"trajectory exceeded horizon_T={model.horizon_T} without absorbing")
        action = act(state)
        cost = model.constraint_cost(state, action)
        (next_state, reward), = model.sample_successors(state, action, rng, 1)
        steps.append(Step(state, action, float(reward), float(cost)))
        state = next_state

    return Trajectory(tuple(steps), state)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    total_reward: float
    total_constraint: float
    length: int


@dataclass(frozen=True)
class EvaluationResult:
    mean_total_reward: float
    mean_total_constraint: float
    reward_se: float
    constraint_se: float
    records: Tuple[TrialRecord, ...]

    @property
    def trials(self) -> int:
        return len(self.records)

    def is_feasible(self, slack_se: float = 2.0) -> bool:
        """Mean constraint within slack_se standard errors of zero"""
        return self.mean_total_constraint <= slack_se * self.constraint_se

    def __iter__(self):
        yield self.mean_total_reward
        yield self.mean_total_constraint
        yield self.records


def _run_trials(model: SampledModel, policy, rng: RngStream, trial_ids: Sequence[int],
                rollout) -> List[TrialRecord]:
    records = []
    for trial in trial_ids:
        trajectory = rollout(model, policy, rng.spawn(trial))
        records.append(TrialRecord(trial, trajectory.total_reward, trajectory.total_constraint,
                                   len(trajectory)))
    return records


def summarize(records: Sequence[TrialRecord]) -> EvaluationResult:
    """Aggregate per-trial records in trial order"""
    ordered = sorted(records, key=lambda r: r.trial)
    rewards = np.array([r.total_reward for r in ordered])
    constraints = np.array([r.total_constraint for r in ordered])
    mean_reward, reward_se = mean_and_standard_error(rewards)
    mean_constraint, constraint_se = mean_and_standard_error(constraints)
    return EvaluationResult(mean_reward, mean_constraint, reward_se, constraint_se, tuple(ordered))


def mc_evaluate(model: SampledModel, policy, trials: int, rng: RngStream,
                workers: Optional[int] = None, rollout=sample_trajectory) -> EvaluationResult:
    """Monte Carlo estimate of expected total reward and constraint cost.

    Trial i always runs on ``rng.spawn(i)`` so the result does not depend on
    the number of workers.
    """
    trials = validate_positive_int(trials, "trials")
    workers = workers or settings.MC_WORKERS
    trial_ids = list(range(trials))

    if workers <= 1 or trials < 2 * workers:
        records = _run_trials(model, policy, rng, trial_ids, rollout)
    else:
        blocks = chunks(trial_ids, (trials + workers - 1) // workers)
        logger.debug(f"Evaluating {trials} trials on {len(blocks)} workers")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trials, model, policy, rng, block, rollout) for block in blocks]
            records = [record for future in futures for record in future.result()]

    result = summarize(records)
    logger.debug(f"MC evaluation over {trials} trials: reward {result.mean_total_reward:.6g} "
                 f"± {result.reward_se:.3g}, constraint {result.mean_total_constraint:.6g} "
                 f"± {result.constraint_se:.3g}")
    return result
