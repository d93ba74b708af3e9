"""
CMDP abstractions: the fully enumerated ExplicitCmdp, the sampled-model
protocol that learners and simulators program against, deterministic
policies and trajectories.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import (Dict, Hashable, List, Mapping, Optional, Protocol, Sequence, Tuple,
                    runtime_checkable)

import numpy as np
from scipy import sparse

from cmdp.rng import RngStream
from utils.constants import Tolerances
from utils.errors import ModelValidationError, PolicyUndefinedError

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


@runtime_checkable
class SampledModel(Protocol):
    """What a learner or simulator needs from an environment"""

    horizon_T: int

    def initial_state(self) -> Hashable: ...

    def is_absorbing(self, state: Hashable) -> bool: ...

    def admissible_actions(self, state: Hashable) -> Sequence[Hashable]: ...

    def constraint_cost(self, state: Hashable, action: Hashable) -> float: ...

    def expected_reward(self, state: Hashable, action: Hashable) -> Optional[float]: ...

    def sample_successors(self, state: Hashable, action: Hashable, rng: RngStream,
                          n: int) -> List[Tuple[Hashable, float]]: ...

    def stage(self, state: Hashable) -> int: ...


@runtime_checkable
class EnumerableModel(SampledModel, Protocol):
    """A sampled model whose transient states can be listed"""

    def transient_states(self) -> Sequence[Hashable]: ...


class ExplicitCmdp:
    """Fully enumerated finite-horizon CMDP.

    States are 0..state_count-1 and actions are integer indices per state.
    ``transition`` maps every admissible (state, action) pair to a mapping
    next_state -> probability. The optional ``stages`` give each state's time
    counter; without them the weight of a state is its longest distance to the
    absorbing set. ``state_labels``/``action_labels`` map indices back to the
    keys of the environment the model was exported from.
    """

    def __init__(self, state_count: int, action_sets: Sequence[Sequence[int]],
                 transition: Mapping[Pair, Mapping[int, float]],
                 reward: Mapping[Pair, float], constraint_cost: Mapping[Pair, float],
                 absorbing: Sequence[bool], initial_state: int, horizon_T: int,
                 stages: Optional[Sequence[int]] = None,
                 state_labels: Optional[Sequence[Hashable]] = None,
                 action_labels: Optional[Sequence[Sequence[Hashable]]] = None):
        self.state_count = int(state_count)
        self.action_sets = tuple(tuple(sorted(int(a) for a in actions)) for actions in action_sets)
        self.transition = MappingProxyType({
            (int(s), int(a)): MappingProxyType({int(nxt): float(p) for nxt, p in sorted(row.items())})
            for (s, a), row in transition.items()
        })
        self.reward = MappingProxyType({(int(s), int(a)): float(r) for (s, a), r in reward.items()})
        self.constraint_cost_table = MappingProxyType(
            {(int(s), int(a)): float(d) for (s, a), d in constraint_cost.items()})
        self.absorbing = tuple(bool(flag) for flag in absorbing)
        self.initial = int(initial_state)
        self.horizon_T = int(horizon_T)
        self.stages = tuple(int(t) for t in stages) if stages is not None else None
        self.state_labels = tuple(state_labels) if state_labels is not None else None
        self.action_labels = (tuple(tuple(labels) for labels in action_labels)
                              if action_labels is not None else None)

    # ----- sampled-model interface -----

    def initial_state(self) -> int:
        return self.initial

    def is_absorbing(self, state: int) -> bool:
        return self.absorbing[state]

    def admissible_actions(self, state: int) -> Tuple[int, ...]:
        return self.action_sets[state]

    def constraint_cost(self, state: int, action: int) -> float:
        return self.constraint_cost_table[(state, action)]

    def expected_reward(self, state: int, action: int) -> float:
        return self.reward[(state, action)]

    def sample_successors(self, state: int, action: int, rng: RngStream,
                          n: int) -> List[Tuple[int, float]]:
        row = self.transition[(state, action)]
        targets = list(row.keys())
        draws = rng.categorical(list(row.values()), size=n)
        reward = self.reward[(state, action)]
        return [(targets[i], reward) for i in draws]

    def stage(self, state: int) -> int:
        if self.stages is not None:
            return self.stages[state]
        if self.absorbing[state]:
            return self.horizon_T
        return self.horizon_T - int(self.steps_to_absorption[state])

    def transient_states(self) -> List[int]:
        return [s for s in range(self.state_count) if not self.absorbing[s]]

    # ----- derived structure -----

    @cached_property
    def pairs(self) -> Tuple[Pair, ...]:
        """All admissible pairs ordered by state, then action index"""
        return tuple((s, a) for s in range(self.state_count) for a in self.action_sets[s])

    @cached_property
    def pair_index(self) -> Dict[Pair, int]:
        return {pair: i for i, pair in enumerate(self.pairs)}

    @cached_property
    def pair_state(self) -> np.ndarray:
        return np.array([s for s, _ in self.pairs], dtype=np.int64)

    @cached_property
    def pair_offsets(self) -> np.ndarray:
        """pairs of state s occupy pair_offsets[s]:pair_offsets[s+1]"""
        counts = np.array([len(actions) for actions in self.action_sets], dtype=np.int64)
        return np.concatenate(([0], np.cumsum(counts)))

    @cached_property
    def transition_matrix(self) -> sparse.csr_matrix:
        """Rows are pairs, columns are next states"""
        rows, cols, vals = [], [], []
        for i, pair in enumerate(self.pairs):
            for nxt, p in self.transition[pair].items():
                rows.append(i)
                cols.append(nxt)
                vals.append(p)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.pairs), self.state_count))

    @cached_property
    def reward_vector(self) -> np.ndarray:
        return np.array([self.reward[pair] for pair in self.pairs], dtype=float)

    @cached_property
    def cost_vector(self) -> np.ndarray:
        return np.array([self.constraint_cost_table[pair] for pair in self.pairs], dtype=float)

    @cached_property
    def absorbing_mask(self) -> np.ndarray:
        return np.array(self.absorbing, dtype=bool)

    @cached_property
    def transient_pair_mask(self) -> np.ndarray:
        return ~self.absorbing_mask[self.pair_state]

    @cached_property
    def steps_to_absorption(self) -> np.ndarray:
        """Longest number of steps to the absorbing set over the support graph.

        inf marks a state that can stay transient forever (a transient cycle).
        """
        white, gray, black = 0, 1, 2
        color = [white] * self.state_count
        longest = np.zeros(self.state_count)
        for root in range(self.state_count):
            if color[root] != white:
                continue
            color[root] = gray
            stack = [(root, iter(self._support(root)))]
            while stack:
                state, successors = stack[-1]
                if self.absorbing[state]:
                    longest[state] = 0.0
                    color[state] = black
                    stack.pop()
                    continue
                descended = False
                for nxt in successors:
                    if color[nxt] == white:
                        color[nxt] = gray
                        stack.append((nxt, iter(self._support(nxt))))
                        descended = True
                        break
                if descended:
                    continue
                best = 0.0
                for nxt in self._support(state):
                    best = max(best, math.inf if color[nxt] == gray else longest[nxt])
                longest[state] = 1.0 + best
                color[state] = black
                stack.pop()
        return longest

    def _support(self, state: int) -> List[int]:
        successors = set()
        for action in self.action_sets[state]:
            row = self.transition.get((state, action), {})
            successors.update(nxt for nxt, p in row.items() if p > 0 and 0 <= nxt < self.state_count)
        return sorted(successors)

    @cached_property
    def xi_weights(self) -> np.ndarray:
        """xi(x) = T - t on transient states, 0 on absorbing ones"""
        weights = np.zeros(self.state_count)
        for s in range(self.state_count):
            if not self.absorbing[s]:
                weights[s] = float(self.horizon_T - self.stage(s))
        return weights

    @property
    def beta(self) -> float:
        return (self.horizon_T - 1) / self.horizon_T

    def policy_count(self) -> int:
        return math.prod(len(self.action_sets[s]) for s in self.transient_states())

    # ----- labels -----

    def label_of(self, state: int) -> Hashable:
        return self.state_labels[state] if self.state_labels is not None else state

    def action_label_of(self, state: int, action: int) -> Hashable:
        if self.action_labels is None:
            return action
        return self.action_labels[state][self.action_sets[state].index(action)]

    def relabeled(self, permutation: Sequence[int]) -> "ExplicitCmdp":
        """Same model with state i renamed permutation[i]"""
        perm = [int(p) for p in permutation]
        if sorted(perm) != list(range(self.state_count)):
            raise ModelValidationError("relabeling must be a permutation of the state indices")

        inverse = [0] * self.state_count
        for old, new in enumerate(perm):
            inverse[new] = old

        return ExplicitCmdp(
            state_count=self.state_count,
            action_sets=[self.action_sets[inverse[new]] for new in range(self.state_count)],
            transition={(perm[s], a): {perm[nxt]: p for nxt, p in row.items()}
                        for (s, a), row in self.transition.items()},
            reward={(perm[s], a): r for (s, a), r in self.reward.items()},
            constraint_cost={(perm[s], a): d for (s, a), d in self.constraint_cost_table.items()},
            absorbing=[self.absorbing[inverse[new]] for new in range(self.state_count)],
            initial_state=perm[self.initial],
            horizon_T=self.horizon_T,
            stages=[self.stages[inverse[new]] for new in range(self.state_count)] if self.stages else None,
            state_labels=([self.state_labels[inverse[new]] for new in range(self.state_count)]
                          if self.state_labels is not None else None),
            action_labels=([self.action_labels[inverse[new]] for new in range(self.state_count)]
                           if self.action_labels is not None else None),
        )

    def __reduce__(self):
        return (ExplicitCmdp, (
            self.state_count, self.action_sets,
            {pair: dict(row) for pair, row in self.transition.items()},
            dict(self.reward), dict(self.constraint_cost_table), self.absorbing, self.initial,
            self.horizon_T, self.stages, self.state_labels, self.action_labels,
        ))

    def __repr__(self):
        return (f"ExplicitCmdp(states={self.state_count}, pairs={len(self.pairs)}, "
                f"T={self.horizon_T}, initial={self.initial})")


def validate_model(model: ExplicitCmdp) -> List[str]:
    """List every violated ExplicitCmdp invariant; empty iff the model is valid"""
    tol = Tolerances.VALIDATION
    report: List[str] = []
    n = model.state_count

    if n < 1:
        return ["state-count: model has no states"]
    if model.horizon_T < 1:
        report.append(f"horizon: horizon_T={model.horizon_T} must be positive")
    if len(model.action_sets) != n or len(model.absorbing) != n:
        return report + ["shape: action_sets and absorbing must have one entry per state"]
    if not 0 <= model.initial < n:
        report.append(f"initial-state: {model.initial} is not a state index")

    for s in range(n):
        if not model.action_sets[s]:
            report.append(f"empty-action-set: state {s} has no admissible action")

    pair_problem = False
    for s in range(n):
        for a in model.action_sets[s]:
            if (s, a) not in model.transition:
                report.append(f"missing-transition: no row for pair ({s}, {a})")
                pair_problem = True
                continue
            if (s, a) not in model.reward or (s, a) not in model.constraint_cost_table:
                report.append(f"missing-cost: pair ({s}, {a}) lacks reward or constraint cost")
                pair_problem = True

            row = model.transition[(s, a)]
            if any(not 0 <= nxt < n for nxt in row):
                report.append(f"bad-index: row ({s}, {a}) points outside the state space")
                pair_problem = True
            if any(p < 0 for p in row.values()):
                report.append(f"row-stochastic: row ({s}, {a}) has a negative entry")
            total = math.fsum(row.values())
            if abs(total - 1.0) > tol:
                report.append(f"row-stochastic: row ({s}, {a}) sums to {total!r}")

            if model.absorbing[s]:
                if abs(row.get(s, 0.0) - 1.0) > tol:
                    report.append(f"absorbing-self-loop: absorbing state {s} leaves itself under action {a}")
                if abs(model.reward.get((s, a), 0.0)) > tol:
                    report.append(f"absorbing-zero-reward: absorbing state {s} has nonzero reward under action {a}")
                if abs(model.constraint_cost_table.get((s, a), 0.0)) > tol:
                    report.append(f"absorbing-zero-cost: absorbing state {s} has nonzero constraint cost "
                                  f"under action {a}")

    if not any(model.absorbing):
        report.append("reachability: the model has no absorbing state")
    elif not pair_problem:
        longest = model.steps_to_absorption
        for s in range(n):
            if math.isinf(longest[s]):
                report.append(f"reachability: state {s} can avoid the absorbing set forever")
            elif longest[s] > model.horizon_T:
                report.append(f"reachability: state {s} needs {int(longest[s])} steps to absorb, "
                              f"more than horizon_T={model.horizon_T}")

    if model.stages is not None and not pair_problem:
        if len(model.stages) != n:
            report.append("stages: one stage per state is required")
        else:
            for s in range(n):
                if model.absorbing[s]:
                    continue
                if not 0 <= model.stages[s] < model.horizon_T:
                    report.append(f"stages: transient state {s} has stage {model.stages[s]} outside [0, T)")
                for a in model.action_sets[s]:
                    for nxt, p in model.transition[(s, a)].items():
                        if p > 0 and not model.absorbing[nxt] and model.stages[nxt] <= model.stages[s]:
                            report.append(f"stages: pair ({s}, {a}) moves to {nxt} without advancing time")

    if report:
        logger.debug(f"Model validation found {len(report)} problem(s)")
    return report


def require_valid(model: ExplicitCmdp) -> ExplicitCmdp:
    """Raise ModelValidationError unless validate_model comes back clean"""
    report = validate_model(model)
    if report:
        raise ModelValidationError("; ".join(report))
    return model


class DeterministicPolicy:
    """Stationary deterministic policy as a finite state -> action mapping"""

    def __init__(self, mapping: Mapping[Hashable, Hashable]):
        self._mapping = MappingProxyType(dict(mapping))

    def action_of(self, state: Hashable) -> Hashable:
        try:
            return self._mapping[state]
        except KeyError:
            raise PolicyUndefinedError(state) from None

    def __call__(self, state: Hashable) -> Hashable:
        return self.action_of(state)

    def __reduce__(self):
        return (DeterministicPolicy, (dict(self._mapping),))

    def as_dict(self) -> Dict[Hashable, Hashable]:
        return dict(self._mapping)

    def __eq__(self, other):
        if not isinstance(other, DeterministicPolicy):
            return NotImplemented
        return dict(self._mapping) == dict(other._mapping)

    def __hash__(self):
        return hash(frozenset(self._mapping.items()))

    def __repr__(self):
        return f"DeterministicPolicy({dict(self._mapping)!r})"


@dataclass(frozen=True)
class Step:
    state: Hashable
    action: Hashable
    reward: float
    constraint_cost: float


@dataclass(frozen=True)
class Trajectory:
    steps: Tuple[Step, ...]
    terminal_state: Hashable

    @property
    def total_reward(self) -> float:
        return math.fsum(step.reward for step in self.steps)

    @property
    def total_constraint(self) -> float:
        return math.fsum(step.constraint_cost for step in self.steps)

    def __len__(self):
        return len(self.steps)
