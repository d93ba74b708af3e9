"""
Two-phase dynamic programming: the feasibility phase (value and Q iteration
for Problem FS), refined feasible action sets, the revenue phase restricted
to them, and policy extraction.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from cmdp.model import DeterministicPolicy, ExplicitCmdp, require_valid
from config.settings import settings
from oracle.operators import bellman_F, bellman_F_R, bellman_T, bellman_T_R
from oracle.tables import FeasibleActionSet, QTable, ValueTable, XiNorm
from utils.constants import Tolerances
from utils.errors import EmptyFeasibleSetError, InfeasibleProblemError, NoConvergenceError

logger = logging.getLogger(__name__)

FEASIBLE = "FEASIBLE"
INFEASIBLE = "INFEASIBLE"


@dataclass
class FixedPoint:
    table: object
    iterations: int
    residuals: List[float] = field(default_factory=list)

    def __iter__(self):
        yield self.table
        yield self.iterations


@dataclass(frozen=True)
class FeasibilityVerdict:
    status: str
    magnitude: float
    value_at_origin: float
    eps_feas: float

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


@dataclass
class RevenueSolution:
    w_star: ValueTable
    h_star: QTable
    iterations: int
    residuals: List[float] = field(default_factory=list)

    def __iter__(self):
        yield self.w_star
        yield self.h_star


@dataclass
class SolverReport:
    model: ExplicitCmdp
    v_star: FixedPoint
    verdict: FeasibilityVerdict
    q_star: Optional[FixedPoint] = None
    feasible_sets: Optional[FeasibleActionSet] = None
    revenue: Optional[RevenueSolution] = None
    policy: Optional[DeterministicPolicy] = None


def default_max_iters(model: ExplicitCmdp, tol: float) -> int:
    return max(1, math.ceil(10 * model.horizon_T * math.log(1.0 / tol)))


def _iterate(label: str, operator: Callable, start, norm: Callable[[np.ndarray], float],
             tol: float, max_iters: int) -> FixedPoint:
    """Jacobi iteration from ``start``; returns the first iterate with residual <= tol"""
    current = start
    residuals: List[float] = []
    for k in range(max_iters + 1):
        following = operator(current)
        residual = norm(following.values - current.values)
        residuals.append(residual)
        if residual <= tol:
            logger.debug(f"{label} converged after {k} iterations (residual {residual:.3e})")
            return FixedPoint(current, k, residuals)
        current = following
    raise NoConvergenceError(label, max_iters, residuals[-1], tol)


def value_iteration_FS(model: ExplicitCmdp, tol: Optional[float] = None,
                       max_iters: Optional[int] = None) -> FixedPoint:
    """V* of Problem FS, iterating T from the all-zero table"""
    tol = tol or settings.DP_TOLERANCE
    max_iters = max_iters or default_max_iters(model, tol)
    xi = XiNorm(model)
    return _iterate("value_iteration_FS", lambda v: bellman_T(model, v), ValueTable(model),
                    xi.of_values, tol, max_iters)


def check_feasibility(model: ExplicitCmdp, v_star: ValueTable,
                      eps_feas: Optional[float] = None) -> FeasibilityVerdict:
    """FEASIBLE iff max{0, V*(x0)} vanishes within eps_feas"""
    eps_feas = settings.EPS_FEAS if eps_feas is None else eps_feas
    origin = v_star[model.initial_state()]
    magnitude = max(0.0, origin)
    status = FEASIBLE if origin <= eps_feas else INFEASIBLE
    logger.debug(f"Feasibility check: V*(x0)={origin:.6g} -> {status}")
    return FeasibilityVerdict(status, magnitude, origin, eps_feas)


def q_iteration_FS(model: ExplicitCmdp, tol: Optional[float] = None,
                   max_iters: Optional[int] = None) -> FixedPoint:
    tol = tol or settings.DP_TOLERANCE
    max_iters = max_iters or default_max_iters(model, tol)
    xi = XiNorm(model)
    return _iterate("compute_Q_star", lambda q: bellman_F(model, q), QTable(model),
                    xi.of_pairs, tol, max_iters)


def compute_Q_star(model: ExplicitCmdp, tol: Optional[float] = None,
                   max_iters: Optional[int] = None) -> QTable:
    """Fixed point of F: expected constraint cost of (x,u) followed by the FS-optimal policy"""
    return q_iteration_FS(model, tol, max_iters).table


def feasible_actions(q_star: QTable, state: int, eps_feas: Optional[float] = None) -> List[int]:
    """U_FS(x): actions within eps of the row minimum whose value is at most eps"""
    eps_feas = settings.EPS_FEAS if eps_feas is None else eps_feas
    row = q_star.row(state)
    lowest = min(row.values())
    chosen = [a for a, q in row.items() if q <= lowest + eps_feas and q <= eps_feas]
    if not chosen:
        raise EmptyFeasibleSetError(state)
    return chosen


def build_feasible_sets(model: ExplicitCmdp, q_star: QTable, eps_feas: Optional[float] = None,
                        verdict: Optional[FeasibilityVerdict] = None) -> FeasibleActionSet:
    eps_feas = settings.EPS_FEAS if eps_feas is None else eps_feas
    members, fallback = {}, {}
    for s in model.transient_states():
        row = q_star.row(s)
        lowest = min(row.values())
        fallback[s] = tuple(a for a, q in row.items() if q <= lowest + eps_feas)
        try:
            members[s] = tuple(feasible_actions(q_star, s, eps_feas))
        except EmptyFeasibleSetError:
            members[s] = ()
    sets = FeasibleActionSet(model, members, fallback, eps_feas, verdict)
    empty = sets.empty_states()
    if empty:
        logger.debug(f"U_FS empty at {len(empty)} state(s); revenue phase uses the near-argmin set there")
    return sets


def value_iteration_OPT(model: ExplicitCmdp, feasible_sets: FeasibleActionSet,
                        tol: Optional[float] = None, max_iters: Optional[int] = None) -> RevenueSolution:
    """W* and H* of the revenue phase over the refined feasible actions"""
    verdict = feasible_sets.verdict
    if verdict is not None and not verdict.feasible:
        raise InfeasibleProblemError(verdict.magnitude, "revenue phase called on an infeasible problem")

    tol = tol or settings.DP_TOLERANCE
    max_iters = max_iters or default_max_iters(model, tol)
    xi = XiNorm(model)
    fixed = _iterate("value_iteration_OPT", lambda w: bellman_T_R(model, w, feasible_sets),
                     ValueTable(model), xi.of_values, tol, max_iters)
    w_star = fixed.table
    h_star = QTable(model, model.reward_vector + model.transition_matrix @ w_star.values)
    return RevenueSolution(w_star, h_star, fixed.iterations, fixed.residuals)


def value_iteration_unconstrained(model: ExplicitCmdp, tol: Optional[float] = None,
                                  max_iters: Optional[int] = None) -> RevenueSolution:
    """Plain revenue value iteration over every admissible action"""
    tol = tol or settings.DP_TOLERANCE
    max_iters = max_iters or default_max_iters(model, tol)
    xi = XiNorm(model)
    fixed = _iterate("value_iteration_unconstrained", lambda w: bellman_T_R(model, w), ValueTable(model),
                     xi.of_values, tol, max_iters)
    h_star = QTable(model, model.reward_vector + model.transition_matrix @ fixed.table.values)
    return RevenueSolution(fixed.table, h_star, fixed.iterations, fixed.residuals)


def revenue_residual(model: ExplicitCmdp, h_star: QTable,
                     feasible_sets: Optional[FeasibleActionSet] = None) -> float:
    """||F_R[H] - H||_xi"""
    return XiNorm(model).of_pairs(bellman_F_R(model, h_star, feasible_sets).values - h_star.values)


def argmax_smallest(values: dict, tie_tol: float = Tolerances.VALIDATION):
    """Key of the largest value; near-ties go to the smallest key"""
    best = max(values.values())
    return min(k for k, v in values.items() if v >= best - tie_tol)


def extract_policy(h_star: QTable, feasible_sets: Optional[FeasibleActionSet] = None) -> DeterministicPolicy:
    """argmax of H* over the revenue actions at every transient state"""
    model = h_star.model
    mapping = {}
    for s in model.transient_states():
        row = h_star.row(s)
        if feasible_sets is not None:
            allowed = feasible_sets.revenue_actions(s)
            if not allowed:
                raise EmptyFeasibleSetError(s)
            row = {a: row[a] for a in allowed}
        mapping[s] = argmax_smallest(row)
    return DeterministicPolicy(mapping)


def labeled_policy(model: ExplicitCmdp, policy: DeterministicPolicy) -> DeterministicPolicy:
    """Translate an index policy into the state/action keys the model was exported from"""
    return DeterministicPolicy({model.label_of(s): model.action_label_of(s, a)
                                for s, a in policy.as_dict().items()})


def solve_two_phase(model: ExplicitCmdp, tol: Optional[float] = None,
                    eps_feas: Optional[float] = None) -> SolverReport:
    """Full pipeline; stops after the feasibility phase when the problem is infeasible"""
    require_valid(model)
    v_star = value_iteration_FS(model, tol)
    verdict = check_feasibility(model, v_star.table, eps_feas)
    report = SolverReport(model, v_star, verdict)
    if not verdict.feasible:
        logger.info(f"❌ Problem infeasible: violation magnitude {verdict.magnitude:.6g}")
        return report

    report.q_star = q_iteration_FS(model, tol)
    report.feasible_sets = build_feasible_sets(model, report.q_star.table, eps_feas, verdict)
    report.revenue = value_iteration_OPT(model, report.feasible_sets, tol)
    report.policy = extract_policy(report.revenue.h_star, report.feasible_sets)
    logger.info(f"✅ Two-phase DP: V*(x0)={verdict.value_at_origin:.6g}, "
                f"W*(x0)={report.revenue.w_star[model.initial_state()]:.6g}")
    return report
