"""
Exact DP tables used to score learned lazy tables in the xi-weighted norm
"""

from typing import Callable, Hashable, Optional, Tuple

from cmdp.model import ExplicitCmdp
from oracle.tables import QTable
from oracle.two_phase_dp import (build_feasible_sets, check_feasibility, q_iteration_FS,
                                 value_iteration_FS, value_iteration_OPT,
                                 value_iteration_unconstrained)
from utils.errors import InfeasibleProblemError

Lookup = Callable[[Hashable, Hashable], float]


class OracleReference:
    """Q* and H* of an explicit model, addressed through its state/action labels"""

    def __init__(self, model: ExplicitCmdp, q_star: Optional[QTable], h_star: QTable):
        self.model = model
        self.q_star = q_star
        self.h_star = h_star
        self._pairs = [(s, a, model.label_of(s), model.action_label_of(s, a), float(model.xi_weights[s]))
                       for s, a in model.pairs if not model.is_absorbing(s)]

    @classmethod
    def two_phase(cls, model: ExplicitCmdp, tol: Optional[float] = None,
                  eps_feas: Optional[float] = None) -> "OracleReference":
        verdict = check_feasibility(model, value_iteration_FS(model, tol).table, eps_feas)
        if not verdict.feasible:
            raise InfeasibleProblemError(verdict.magnitude)
        q_star = q_iteration_FS(model, tol).table
        sets = build_feasible_sets(model, q_star, eps_feas, verdict)
        return cls(model, q_star, value_iteration_OPT(model, sets, tol).h_star)

    @classmethod
    def unconstrained(cls, model: ExplicitCmdp, tol: Optional[float] = None) -> "OracleReference":
        return cls(model, None, value_iteration_unconstrained(model, tol).h_star)

    def _error(self, exact: QTable, lookup: Lookup) -> float:
        worst = 0.0
        for s, a, state_key, action_key, weight in self._pairs:
            worst = max(worst, abs(lookup(state_key, action_key) - exact.get(s, a)) / weight)
        return worst

    def q_error(self, lookup: Lookup) -> Optional[float]:
        return None if self.q_star is None else self._error(self.q_star, lookup)

    def h_error(self, lookup: Lookup) -> float:
        return self._error(self.h_star, lookup)

    def errors(self, qpair) -> Tuple[Optional[float], float]:
        return self.q_error(qpair.q), self.h_error(qpair.h)
