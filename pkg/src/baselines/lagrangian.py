"""
Lagrangian Q-learning baseline.

Two critics learn the revenue and the constraint cost of the greedy policy of
the combined score H_R - lambda*H_D (for fixed lambda this is Q-learning on
R - lambda*D). After every episode the multiplier takes a projected ascent
step on the realized episodic constraint cost.
"""

import logging
import math
from dataclasses import dataclass
from typing import Hashable, List, Sequence

from baselines.q_learning import BaselineResult, TablePolicy, sampled_reward
from cmdp.model import SampledModel
from cmdp.rng import RngStream
from learning.config import LearnerConfig
from learning.learning_log import CheckpointRecorder
from learning.qpair import LazyTable
from learning.schedule import step_sizes
from oracle.two_phase_dp import argmax_smallest
from utils.constants import DefaultSettings
from utils.errors import ModelValidationError, PolicyUndefinedError
from utils.validators import validate_range

logger = logging.getLogger(__name__)

DEFAULT_TIE_TOLERANCE = 0.05


@dataclass
class LagrangeState:
    multiplier: float = 0.0
    multiplier_step_exponent: float = DefaultSettings.MULTIPLIER_STEP_EXPONENT

    def __post_init__(self):
        validate_range(self.multiplier, "multiplier", 0.0, math.inf)
        validate_range(self.multiplier_step_exponent, "multiplier_step_exponent", 0.0, math.inf, low_open=True)

    def step_size(self, episode: int) -> float:
        """eta_k = (1+k)^-exponent for the k-th completed episode, k from 0"""
        return (1.0 + episode) ** -self.multiplier_step_exponent

    def ascend(self, episode: int, episodic_cost: float) -> float:
        self.multiplier = max(0.0, self.multiplier + self.step_size(episode) * episodic_cost)
        return self.multiplier


class LagrangianCritic:
    """Reward and cost tables sharing the greedy action of the combined score"""

    def __init__(self, model: SampledModel):
        self.model = model
        self.reward_table = LazyTable()
        self.cost_table = LazyTable()

    def combined(self, state: Hashable, action: Hashable, multiplier: float) -> float:
        return self.reward_table.get(state, action) - multiplier * self.cost_table.get(state, action)

    def greedy(self, state: Hashable, actions: Sequence[Hashable], multiplier: float) -> Hashable:
        return argmax_smallest({u: self.combined(state, u, multiplier) for u in actions})

    def continuation(self, state: Hashable, multiplier: float):
        if self.model.is_absorbing(state):
            return 0.0, 0.0
        u = self.greedy(state, self.model.admissible_actions(state), multiplier)
        return self.reward_table.get(state, u), self.cost_table.get(state, u)

    def snapshot(self) -> "LagrangianCritic":
        copy = LagrangianCritic(self.model)
        copy.reward_table = self.reward_table.snapshot()
        copy.cost_table = self.cost_table.snapshot()
        return copy


class LagrangianPolicy:
    """Greedy on the combined score; near-ties within tie_tolerance go to the lower cost critic"""

    def __init__(self, critic: LagrangianCritic, multiplier: float, tie_tolerance: float):
        self.critic = critic
        self.multiplier = multiplier
        self.tie_tolerance = tie_tolerance

    def action_of(self, state: Hashable) -> Hashable:
        model = self.critic.model
        if model.is_absorbing(state):
            raise PolicyUndefinedError(state)
        actions = model.admissible_actions(state)
        scores = {u: self.critic.combined(state, u, self.multiplier) for u in actions}
        best = max(scores.values())
        near = [u for u in actions if scores[u] >= best - self.tie_tolerance]
        return min(near, key=lambda u: (self.critic.cost_table.get(state, u), -scores[u], actions.index(u)))

    def __call__(self, state: Hashable) -> Hashable:
        return self.action_of(state)


def train_lagrangian_q(model: SampledModel, config: LearnerConfig, lagrange: LagrangeState,
                       rng: RngStream, tie_tolerance: float = DEFAULT_TIE_TOLERANCE) -> BaselineResult:
    """Critics on the fast timescale, the multiplier on the slowest; returns tables, policy and lambda trace"""
    critic = LagrangianCritic(model)
    recorder = CheckpointRecorder(model, config, rng)
    recorder.log.with_multiplier = True
    n = config.schedule.sample_batch_N
    trace: List[float] = []
    updates = 0

    for episode in range(1, config.max_episodes + 1):
        state = model.initial_state()
        episodic_cost = 0.0
        steps = 0
        while not model.is_absorbing(state):
            if steps >= model.horizon_T:
                raise ModelValidationError(f"episode exceeded horizon_T={model.horizon_T}")
            actions = model.admissible_actions(state)
            if rng.random() < config.exploration_epsilon:
                action = actions[rng.integers(len(actions))]
            else:
                action = critic.greedy(state, actions, lagrange.multiplier)

            samples = model.sample_successors(state, action, rng, n)
            cost = model.constraint_cost(state, action)
            continuations = [critic.continuation(nxt, lagrange.multiplier) for nxt, _ in samples]
            reward_target = (sampled_reward(model, state, action, samples)
                             + math.fsum(c[0] for c in continuations) / n)
            cost_target = cost + math.fsum(c[1] for c in continuations) / n
            _, zeta2 = step_sizes(critic.reward_table.visits(state, action), config.schedule)
            critic.reward_table.update(state, action, reward_target, zeta2)
            critic.cost_table.update(state, action, cost_target, zeta2)

            episodic_cost += cost
            state = samples[0][0]
            steps += 1
            updates += 1

        recorder.log.episode_lengths.append(steps)
        trace.append(lagrange.ascend(episode - 1, episodic_cost))

        if recorder.due(episode):
            policy = LagrangianPolicy(critic.snapshot(), lagrange.multiplier, tie_tolerance)
            recorder.record(policy, episode, updates, multiplier=lagrange.multiplier)

    policy = LagrangianPolicy(critic.snapshot(), lagrange.multiplier, tie_tolerance)
    logger.info(f"✅ Lagrangian Q-learning done: lambda={lagrange.multiplier:.6g}")
    return BaselineResult(critic.reward_table, policy, recorder.log, trace)
