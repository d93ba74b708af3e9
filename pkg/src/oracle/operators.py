"""
Bellman operators of the two phases.

The lower clip max{B(x), .} is -inf on transient states and therefore the
identity there; absorbing states are pinned to 0 by the table types, so the
clip never enters the arithmetic.
"""

from typing import Optional

import numpy as np

from cmdp.model import ExplicitCmdp
from oracle.tables import FeasibleActionSet, QTable, ValueTable


def _per_state_min(model: ExplicitCmdp, pair_values: np.ndarray) -> np.ndarray:
    out = np.minimum.reduceat(pair_values, model.pair_offsets[:-1])
    out[model.absorbing_mask] = 0.0
    return out


def _per_state_max(model: ExplicitCmdp, pair_values: np.ndarray,
                   feasible_sets: Optional[FeasibleActionSet]) -> np.ndarray:
    if feasible_sets is not None:
        pair_values = np.where(feasible_sets.revenue_mask(), pair_values, -np.inf)
    out = np.maximum.reduceat(pair_values, model.pair_offsets[:-1])
    out[model.absorbing_mask] = 0.0
    return out


def bellman_T(model: ExplicitCmdp, v: ValueTable) -> ValueTable:
    """T[V](x) = min_u D(x,u) + sum_x' P(x'|x,u) V(x')"""
    backed_up = model.cost_vector + model.transition_matrix @ v.values
    return ValueTable(model, _per_state_min(model, backed_up))


def bellman_F(model: ExplicitCmdp, q: QTable) -> QTable:
    """F[Q](x,u) = D(x,u) + sum_x' P(x'|x,u) min_u' Q(x',u')"""
    return QTable(model, model.cost_vector + model.transition_matrix @ q.min_per_state())


def bellman_T_R(model: ExplicitCmdp, w: ValueTable,
                feasible_sets: Optional[FeasibleActionSet] = None) -> ValueTable:
    """T_R[W](x) = max over the revenue actions of R(x,u) + sum P W; all actions when no sets are given"""
    backed_up = model.reward_vector + model.transition_matrix @ w.values
    return ValueTable(model, _per_state_max(model, backed_up, feasible_sets))


def bellman_F_R(model: ExplicitCmdp, h: QTable,
                feasible_sets: Optional[FeasibleActionSet] = None) -> QTable:
    """F_R[H](x,u) = R(x,u) + sum P max over the revenue actions of H(x',.)"""
    best_next = _per_state_max(model, h.values, feasible_sets)
    return QTable(model, model.reward_vector + model.transition_matrix @ best_next)
