"""
Two-phase Q-learning.

Q learns the expected constraint cost of (x, u) followed by the
feasibility-optimal continuation on the fast timescale; H learns revenue on
the slow timescale, maximizing only over the noisy feasible set built from
the current Q. Both the synchronous sweep and the asynchronous episodic
variant share the sampled backup below.
"""

import logging
import math
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from cmdp.model import SampledModel
from cmdp.rng import RngStream
from config.settings import settings
from learning.config import LearnerConfig
from learning.learning_log import CheckpointRecorder, LearningLog
from learning.qpair import LazyQPair
from learning.reference import OracleReference
from oracle.two_phase_dp import argmax_smallest
from utils.errors import ModelValidationError, NotEnumerableError, PolicyUndefinedError

logger = logging.getLogger(__name__)


def _tolerance(qpair: LazyQPair, state: Hashable, action: Hashable, config: LearnerConfig) -> float:
    if config.shrink_eps:
        return config.eps_feas_learn / math.sqrt(1.0 + qpair.visits(state, action))
    return config.eps_feas_learn


def noisy_feasible_set(qpair: LazyQPair, state: Hashable, actions: Sequence[Hashable],
                       config: LearnerConfig) -> List[Hashable]:
    """U_FS built from the current Q estimates"""
    values = {u: qpair.q(state, u) for u in actions}
    lowest = min(values.values())
    chosen = []
    for u, q in values.items():
        eps = _tolerance(qpair, state, u, config)
        if q <= lowest + eps and q <= eps:
            chosen.append(u)
    return chosen


def revenue_actions(qpair: LazyQPair, state: Hashable, actions: Sequence[Hashable],
                    config: LearnerConfig) -> List[Hashable]:
    """Noisy U_FS, or the near-argmin actions of Q when it is empty"""
    chosen = noisy_feasible_set(qpair, state, actions, config)
    if chosen:
        return chosen
    values = {u: qpair.q(state, u) for u in actions}
    lowest = min(values.values())
    return [u for u, q in values.items() if q <= lowest + _tolerance(qpair, state, u, config)]


def greedy_action(qpair: LazyQPair, state: Hashable, actions: Sequence[Hashable],
                  config: LearnerConfig) -> Hashable:
    allowed = revenue_actions(qpair, state, actions, config)
    return argmax_smallest({u: qpair.h(state, u) for u in allowed})


def select_action(qpair: LazyQPair, state: Hashable, actions: Sequence[Hashable],
                  config: LearnerConfig, rng: RngStream) -> Hashable:
    """Epsilon-greedy over the admissible actions around the two-phase greedy choice.

    ``actions`` is the admissible set at ``state``, as returned by
    ``model.admissible_actions``.
    """
    if rng.random() < config.exploration_epsilon:
        return actions[rng.integers(len(actions))]
    return greedy_action(qpair, state, actions, config)


class _Backup:
    """Sampled targets for one set of (frozen) tables; caches per-state continuation values"""

    def __init__(self, model: SampledModel, tables: LazyQPair, config: LearnerConfig):
        self.model = model
        self.tables = tables
        self.config = config
        self._continuation: Dict[Hashable, Tuple[float, float]] = {}

    def continuation(self, state: Hashable) -> Tuple[float, float]:
        """(min_u Q(x,u), max over the revenue actions of H(x,u)); zero when absorbing"""
        if state in self._continuation:
            return self._continuation[state]
        if self.model.is_absorbing(state):
            values = (0.0, 0.0)
        else:
            actions = self.model.admissible_actions(state)
            q_min = min(self.tables.q(state, u) for u in actions)
            allowed = revenue_actions(self.tables, state, actions, self.config)
            h_max = max(self.tables.h(state, u) for u in allowed)
            values = (q_min, h_max)
        self._continuation[state] = values
        return values

    def targets(self, state: Hashable, action: Hashable,
                rng: RngStream) -> Tuple[float, float, List[Tuple[Hashable, float]]]:
        n = self.config.schedule.sample_batch_N
        samples = self.model.sample_successors(state, action, rng, n)
        continuations = [self.continuation(nxt) for nxt, _ in samples]
        q_next = math.fsum(c[0] for c in continuations) / n
        h_next = math.fsum(c[1] for c in continuations) / n
        reward = self.model.expected_reward(state, action)
        if reward is None:
            reward = math.fsum(r for _, r in samples) / n
        return self.model.constraint_cost(state, action) + q_next, reward + h_next, samples


class LazyPolicy:
    """Greedy two-phase policy read off a frozen copy of the tables"""

    def __init__(self, model: SampledModel, tables: LazyQPair, config: LearnerConfig):
        self.model = model
        self.tables = tables
        self.config = config

    def action_of(self, state: Hashable) -> Hashable:
        if self.model.is_absorbing(state):
            raise PolicyUndefinedError(state)
        return greedy_action(self.tables, state, self.model.admissible_actions(state), self.config)

    def __call__(self, state: Hashable) -> Hashable:
        return self.action_of(state)


def extract_learned_policy(qpair: LazyQPair, model: SampledModel, config: LearnerConfig) -> LazyPolicy:
    return LazyPolicy(model, qpair.snapshot(), config)


def sync_sweep(model: SampledModel, qpair: LazyQPair, config: LearnerConfig, rng: RngStream) -> LazyQPair:
    """One Jacobi sweep over every transient (x, u) using targets from the tables at sweep start"""
    if not hasattr(model, "transient_states"):
        raise NotEnumerableError(f"{type(model).__name__} cannot list its states; use train_async")

    states = list(model.transient_states())
    pairs = [(x, u) for x in states for u in model.admissible_actions(x)]
    if len(pairs) > settings.SYNC_PAIR_LIMIT:
        raise NotEnumerableError(f"{len(pairs)} state-action pairs exceed SYNC_PAIR_LIMIT="
                                 f"{settings.SYNC_PAIR_LIMIT}")

    backup = _Backup(model, qpair.snapshot(), config)
    for x, u in pairs:
        q_target, h_target, _ = backup.targets(x, u, rng)
        qpair.update(x, u, q_target, h_target, config.schedule)
    return qpair


def _checkpoint(recorder: CheckpointRecorder, qpair: LazyQPair, model: SampledModel,
                config: LearnerConfig, episode: int, updates: int) -> None:
    frozen = qpair.snapshot()
    recorder.record(LazyPolicy(model, frozen, config), episode, updates, frozen.q, frozen.h)


def train_sync(model: SampledModel, config: LearnerConfig, rng: RngStream,
               reference: Optional[OracleReference] = None) -> Tuple[LazyQPair, LearningLog]:
    """max_episodes synchronous sweeps with checkpoints every eval_every sweeps"""
    qpair = LazyQPair()
    recorder = CheckpointRecorder(model, config, rng, reference)
    log = recorder.log
    updates = 0

    for sweep in range(1, config.max_episodes + 1):
        sync_sweep(model, qpair, config, rng)
        updates = sum(qpair.visit_counts.values())
        if recorder.due(sweep):
            _checkpoint(recorder, qpair, model, config, sweep, updates)

    logger.info(f"✅ Synchronous training done: {config.max_episodes} sweeps, {updates} updates")
    return qpair, log


def train_async(model: SampledModel, config: LearnerConfig, rng: RngStream,
                reference: Optional[OracleReference] = None) -> Tuple[LazyQPair, LearningLog]:
    """Episodic training from x0 with reset on absorption; only visited pairs are updated"""
    qpair = LazyQPair()
    recorder = CheckpointRecorder(model, config, rng, reference)
    log = recorder.log
    updates = 0

    for episode in range(1, config.max_episodes + 1):
        state = model.initial_state()
        steps = 0
        while not model.is_absorbing(state):
            if steps >= model.horizon_T:
                raise ModelValidationError(f"episode exceeded horizon_T={model.horizon_T}")
            actions = model.admissible_actions(state)
            action = select_action(qpair, state, actions, config, rng)
            q_target, h_target, samples = _Backup(model, qpair, config).targets(state, action, rng)
            qpair.update(state, action, q_target, h_target, config.schedule)
            state = samples[0][0]
            steps += 1
            updates += 1
        log.episode_lengths.append(steps)
        if recorder.due(episode):
            _checkpoint(recorder, qpair, model, config, episode, updates)

    logger.info(f"✅ Asynchronous training done: {config.max_episodes} episodes, {updates} updates")
    return qpair, log
