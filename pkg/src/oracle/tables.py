"""
Value tables, state-action tables, the xi-weighted sup norm and refined
feasible action sets over an ExplicitCmdp.
"""

from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from cmdp.model import ExplicitCmdp


def _frozen(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


class XiNorm:
    """max over transient x of |f(x)| / xi(x), with xi(x) = T - t"""

    def __init__(self, model: ExplicitCmdp):
        self.weights = model.xi_weights
        self.beta = model.beta
        transient = ~model.absorbing_mask
        self._state_mask = transient
        self._pair_mask = model.transient_pair_mask
        self._pair_weights = self.weights[model.pair_state]

    def of_values(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        if not self._state_mask.any():
            return 0.0
        return float(np.max(np.abs(values[self._state_mask]) / self.weights[self._state_mask]))

    def of_pairs(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        if not self._pair_mask.any():
            return 0.0
        return float(np.max(np.abs(values[self._pair_mask]) / self._pair_weights[self._pair_mask]))

    def __call__(self, table) -> float:
        if isinstance(table, QTable):
            return self.of_pairs(table.values)
        if isinstance(table, ValueTable):
            return self.of_values(table.values)
        raise TypeError(f"cannot take the xi-norm of {type(table).__name__}")


class ValueTable:
    """Per-state values, pinned to 0 on absorbing states"""

    def __init__(self, model: ExplicitCmdp, values: Optional[Iterable[float]] = None):
        self.model = model
        array = np.zeros(model.state_count) if values is None else np.array(values, dtype=float)
        if array.shape != (model.state_count,):
            raise ValueError(f"expected {model.state_count} values, got shape {array.shape}")
        array[model.absorbing_mask] = 0.0
        self.values = _frozen(array)

    def __getitem__(self, state: int) -> float:
        return float(self.values[state])

    def __add__(self, constant: float) -> "ValueTable":
        return ValueTable(self.model, self.values + constant)

    def __sub__(self, other: "ValueTable") -> np.ndarray:
        return self.values - other.values

    def as_dict(self) -> Dict[int, float]:
        return {s: float(v) for s, v in enumerate(self.values)}

    def __repr__(self):
        return f"ValueTable({np.array2string(self.values, precision=6)})"


class QTable:
    """Values on admissible (state, action) pairs, pinned to 0 on absorbing pairs"""

    def __init__(self, model: ExplicitCmdp, values: Optional[Iterable[float]] = None):
        self.model = model
        n_pairs = len(model.pairs)
        array = np.zeros(n_pairs) if values is None else np.array(values, dtype=float)
        if array.shape != (n_pairs,):
            raise ValueError(f"expected {n_pairs} pair values, got shape {array.shape}")
        array[~model.transient_pair_mask] = 0.0
        self.values = _frozen(array)

    def get(self, state: int, action: int) -> float:
        return float(self.values[self.model.pair_index[(state, action)]])

    def __getitem__(self, pair: Tuple[int, int]) -> float:
        return self.get(*pair)

    def row(self, state: int) -> Dict[int, float]:
        start, stop = self.model.pair_offsets[state], self.model.pair_offsets[state + 1]
        return {a: float(v) for a, v in zip(self.model.action_sets[state], self.values[start:stop])}

    def min_per_state(self) -> np.ndarray:
        out = np.minimum.reduceat(self.values, self.model.pair_offsets[:-1])
        out[self.model.absorbing_mask] = 0.0
        return out

    def __sub__(self, other: "QTable") -> np.ndarray:
        return self.values - other.values

    def as_dict(self) -> Dict[Tuple[int, int], float]:
        return {pair: float(v) for pair, v in zip(self.model.pairs, self.values)}

    def __repr__(self):
        return f"QTable({len(self.values)} pairs)"


class FeasibleActionSet:
    """Refined feasible action sets U_FS(x) for every transient state.

    ``members[x]`` are the actions passing the U_FS test. ``fallback[x]`` is
    the near-argmin set of the feasibility table; the revenue phase maximizes
    over it at states whose U_FS is empty.
    """

    def __init__(self, model: ExplicitCmdp, members: Dict[int, Tuple[int, ...]],
                 fallback: Dict[int, Tuple[int, ...]], eps_feas: float, verdict=None):
        self.model = model
        self.members = dict(members)
        self.fallback = dict(fallback)
        self.eps_feas = eps_feas
        self.verdict = verdict

    def of(self, state: int) -> Tuple[int, ...]:
        return self.members.get(state, ())

    def revenue_actions(self, state: int) -> Tuple[int, ...]:
        return self.members.get(state) or self.fallback[state]

    def empty_states(self):
        return [s for s in self.model.transient_states() if not self.members.get(s)]

    def revenue_mask(self) -> np.ndarray:
        """Boolean mask over pairs selecting revenue_actions at each transient state"""
        mask = np.zeros(len(self.model.pairs), dtype=bool)
        for s in self.model.transient_states():
            for a in self.revenue_actions(s):
                mask[self.model.pair_index[(s, a)]] = True
        mask[~self.model.transient_pair_mask] = True
        return mask

    def bitmask(self, state: int) -> str:
        """Membership over the state's admissible actions, first action leftmost"""
        chosen = set(self.of(state))
        return "".join("1" if a in chosen else "0" for a in self.model.action_sets[state])

    def __repr__(self):
        return f"FeasibleActionSet(eps={self.eps_feas}, empty_at={len(self.empty_states())})"
