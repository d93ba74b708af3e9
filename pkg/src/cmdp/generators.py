"""
Small CMDP families used by the oracle suites and the learners' tests
"""

import logging
import math
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from cmdp.model import ExplicitCmdp
from cmdp.rng import RngStream

logger = logging.getLogger(__name__)

ACTION_A = 0
ACTION_B = 1


def toy_model(d_a: float = -1.0, d_b: float = 1.0, r_a: float = 1.0, r_b: float = 5.0) -> ExplicitCmdp:
    """One transient state s0 with actions a=0 and b=1, both going straight to END=1"""
    return ExplicitCmdp(
        state_count=2,
        action_sets=[[ACTION_A, ACTION_B], [0]],
        transition={(0, ACTION_A): {1: 1.0}, (0, ACTION_B): {1: 1.0}, (1, 0): {1: 1.0}},
        reward={(0, ACTION_A): r_a, (0, ACTION_B): r_b, (1, 0): 0.0},
        constraint_cost={(0, ACTION_A): d_a, (0, ACTION_B): d_b, (1, 0): 0.0},
        absorbing=[False, True],
        initial_state=0,
        horizon_T=1,
        stages=[0, 1],
    )


def chain_model(costs: Sequence[float], rewards: Optional[Sequence[float]] = None) -> ExplicitCmdp:
    """Single-action chain s0 -> s1 -> ... -> END"""
    length = len(costs)
    rewards = rewards if rewards is not None else [0.0] * length
    end = length
    transition = {(s, 0): {s + 1: 1.0} for s in range(length)}
    transition[(end, 0)] = {end: 1.0}
    return ExplicitCmdp(
        state_count=length + 1,
        action_sets=[[0]] * (length + 1),
        transition=transition,
        reward={**{(s, 0): float(rewards[s]) for s in range(length)}, (end, 0): 0.0},
        constraint_cost={**{(s, 0): float(costs[s]) for s in range(length)}, (end, 0): 0.0},
        absorbing=[False] * length + [True],
        initial_state=0,
        horizon_T=length,
        stages=list(range(length)) + [length],
    )


def branch_model(p_left: float = 0.5, left_reward: float = 0.0, right_reward: float = 2.0,
                 left_cost: float = 0.0, right_cost: float = 0.0) -> ExplicitCmdp:
    """s0 branches to L=1 or R=2, each of which pays out and ends in END=3"""
    return ExplicitCmdp(
        state_count=4,
        action_sets=[[0], [0], [0], [0]],
        transition={(0, 0): {1: p_left, 2: 1.0 - p_left}, (1, 0): {3: 1.0}, (2, 0): {3: 1.0},
                    (3, 0): {3: 1.0}},
        reward={(0, 0): 0.0, (1, 0): left_reward, (2, 0): right_reward, (3, 0): 0.0},
        constraint_cost={(0, 0): 0.0, (1, 0): left_cost, (2, 0): right_cost, (3, 0): 0.0},
        absorbing=[False, False, False, True],
        initial_state=0,
        horizon_T=2,
        stages=[0, 1, 1, 2],
    )


def random_episodic_cmdp(rng: RngStream, n_states: int = 12, max_actions: int = 4,
                         horizon: Optional[int] = None, max_policies: int = 10 ** 5,
                         cost_shift: float = 0.0, zero_cost: bool = False,
                         deterministic: bool = False, max_branching: int = 2,
                         early_end_probability: float = 0.2) -> ExplicitCmdp:
    """Layered episodic CMDP with a single absorbing END state (the last index).

    State 0 sits alone at stage 0; every later stage holds at least one state.
    Rewards are uniform on [0, 5], constraint costs uniform on [-1, 1] plus
    ``cost_shift``.
    """
    gen = rng.generator
    if horizon is None:
        horizon = 3 + int(gen.integers(4))
    n_transient = n_states - 1
    if n_transient < horizon:
        raise ValueError(f"need at least {horizon + 1} states for horizon {horizon}")

    if horizon > 1:
        extra = sorted(int(t) for t in gen.integers(1, horizon, size=n_transient - horizon))
    else:
        extra = [0] * (n_transient - horizon)
    stages = sorted([0] + list(range(1, horizon)) + extra)
    end = n_transient
    by_stage: Dict[int, list] = {}
    for s, t in enumerate(stages):
        by_stage.setdefault(t, []).append(s)

    action_counts = [1 + int(gen.integers(max_actions)) for _ in range(n_transient)]
    while math.prod(action_counts) > max_policies:
        action_counts[int(np.argmax(action_counts))] -= 1

    action_sets, transition, reward, cost = [], {}, {}, {}
    for s in range(n_transient):
        actions = list(range(action_counts[s]))
        action_sets.append(actions)
        following = by_stage.get(stages[s] + 1, [])
        for a in actions:
            if not following:
                targets = [end]
            else:
                width = 1 if deterministic else 1 + int(gen.integers(min(max_branching, len(following))))
                targets = sorted(int(x) for x in gen.choice(following, size=width, replace=False))
                if not deterministic and gen.random() < early_end_probability:
                    targets.append(end)
            weights = np.ones(1) if len(targets) == 1 else gen.dirichlet(np.ones(len(targets)))
            transition[(s, a)] = {t: float(w) for t, w in zip(targets, weights)}
            reward[(s, a)] = float(gen.uniform(0.0, 5.0))
            cost[(s, a)] = 0.0 if zero_cost else float(gen.uniform(-1.0, 1.0) + cost_shift)

    action_sets.append([0])
    transition[(end, 0)] = {end: 1.0}
    reward[(end, 0)] = 0.0
    cost[(end, 0)] = 0.0

    model = ExplicitCmdp(
        state_count=n_states,
        action_sets=action_sets,
        transition=_normalized(transition),
        reward=reward,
        constraint_cost=cost,
        absorbing=[False] * n_transient + [True],
        initial_state=0,
        horizon_T=horizon,
        stages=stages + [horizon],
    )
    logger.debug(f"Generated {model!r} with {model.policy_count()} policies")
    return model


def _normalized(transition: Dict[Tuple[int, int], Dict[int, float]]) -> Dict[Tuple[int, int], Dict[int, float]]:
    """Renormalize rows so they sum to one well inside the validation tolerance"""
    out = {}
    for pair, row in transition.items():
        total = math.fsum(row.values())
        out[pair] = {nxt: p / total for nxt, p in row.items()}
    return out
