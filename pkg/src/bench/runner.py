"""
Seeded training/evaluation runs, comparison tables and curve emission.

Replication r trains on stream ``Streams.TRAIN + r`` of the run seed (``--seed``,
else the scenario's ``base_seed``, else BASE_SEED); every
final policy is evaluated on the shared evaluation stream, so rows of
different algorithms are paired comparisons.
"""

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from baselines.greedy import evaluate_greedy
from baselines.lagrangian import train_lagrangian_q
from baselines.q_learning import grid_search_penalty, train_vanilla_q
from bench.plan import ExperimentPlan
from cmdp.io import write_model
from cmdp.model import DeterministicPolicy, ExplicitCmdp
from cmdp.rng import RngStream
from cmdp.simulate import EvaluationResult, TrialRecord, mc_evaluate, summarize
from config.settings import settings
from learning.learning_log import LearningLog
from learning.reference import OracleReference
from learning.two_phase import extract_learned_policy, train_async, train_sync
from oracle.report import dumps_report
from oracle.two_phase_dp import labeled_policy, solve_two_phase
from rideshare.environment import VehicleSharingModel
from rideshare.export import export_explicit
from rideshare.scenario import Scenario, load_scenario
from utils.constants import Algorithms, Emojis, Streams
from utils.helpers import format_seconds
from utils.errors import (EnumerationTooLargeError, InfeasibleProblemError, MismatchedScenarioError,
                          NonFiniteSupportError, PolicyUndefinedError, PreconditionError)

logger = logging.getLogger(__name__)

ROW_COLUMNS = ["algorithm", "mean_reward", "reward_se", "mean_constraint", "constraint_se", "feasible",
               "trials", "updates", "wallclock_seconds", "exact_value"]


@dataclass
class ComparisonRow:
    algorithm: str
    mean_reward: float
    reward_se: float
    mean_constraint: float
    constraint_se: float
    feasible: bool
    trials: int
    updates: int = 0
    wallclock_seconds: Optional[float] = None
    exact_value: Optional[float] = None

    @classmethod
    def from_evaluation(cls, algorithm: str, evaluation: EvaluationResult, updates: int = 0,
                        wallclock: Optional[float] = None, exact_value: Optional[float] = None) -> "ComparisonRow":
        return cls(algorithm, evaluation.mean_total_reward, evaluation.reward_se,
                   evaluation.mean_total_constraint, evaluation.constraint_se, evaluation.is_feasible(),
                   evaluation.trials, updates, wallclock, exact_value)


@dataclass
class RunResult:
    plan: ExperimentPlan
    row: ComparisonRow
    logs: List[LearningLog] = field(default_factory=list)
    snapshots: List[str] = field(default_factory=list)
    paths: Dict[str, Path] = field(default_factory=dict)


class ExportedPolicy:
    """Index policy of an exported model, queried with environment state keys"""

    def __init__(self, explicit: ExplicitCmdp, policy, env: VehicleSharingModel):
        self.labeled = labeled_policy(explicit, DeterministicPolicy(
            {s: policy.action_of(s) for s in explicit.transient_states()}))
        self.env = env

    def action_of(self, state: Hashable) -> Hashable:
        try:
            return self.labeled.action_of(state)
        except PolicyUndefinedError:
            # beyond the exported support (folded Poisson tail)
            return self.env.admissible_actions(state)[0]

    def __call__(self, state: Hashable) -> Hashable:
        return self.action_of(state)


def _reference(explicit: Optional[ExplicitCmdp], constrained: bool) -> Optional[OracleReference]:
    if explicit is None:
        return None
    try:
        return OracleReference.two_phase(explicit) if constrained else OracleReference.unconstrained(explicit)
    except InfeasibleProblemError:
        logger.warning(f"{Emojis.WARNING} Scenario is infeasible; curves carry no Q error")
        return None


def _try_export(scenario: Scenario) -> Optional[ExplicitCmdp]:
    try:
        return export_explicit(scenario)
    except (EnumerationTooLargeError, NonFiniteSupportError) as e:
        logger.warning(f"{Emojis.WARNING} No exact reference for '{scenario.name}': {e}")
        return None


def _train_once(plan: ExperimentPlan, scenario: Scenario, env: VehicleSharingModel,
                explicit: Optional[ExplicitCmdp], rng: RngStream):
    """(policy, log or None, snapshot text, update count) for one replication"""
    config = plan.config.learner_config(scenario.d)
    algorithm = plan.algorithm

    if algorithm == Algorithms.TWO_PHASE_SYNC:
        reference = _reference(explicit, constrained=True)
        qpair, log = train_sync(explicit, config, rng, reference)
        policy = ExportedPolicy(explicit, extract_learned_policy(qpair, explicit, config), env)
        return policy, log, qpair.dumps(), log.last.update_count

    if algorithm == Algorithms.TWO_PHASE_ASYNC:
        reference = _reference(explicit, constrained=True) if plan.config.reference else None
        qpair, log = train_async(env, config, rng, reference)
        return extract_learned_policy(qpair, env, config), log, qpair.dumps(), log.last.update_count

    if algorithm == Algorithms.VANILLA:
        reference = _reference(explicit, constrained=False) if plan.config.reference else None
        result = train_vanilla_q(env, config, rng, reference)
    elif algorithm == Algorithms.PENALIZED:
        search = grid_search_penalty(env, plan.config.penalty.weights, config, rng, plan.trials)
        result = search.result
    else:
        result = train_lagrangian_q(env, config, plan.config.lagrange_state(), rng,
                                    plan.config.lagrange.tie_tolerance)

    return result.policy, result.log, result.h_table.dumps(), result.log.last.update_count


def execute(plan: ExperimentPlan) -> RunResult:
    """Train (or solve) and evaluate per the plan, without touching the disk"""
    scenario = load_scenario(plan.scenario_path)
    env = VehicleSharingModel(scenario)
    seed = plan.seed_for(scenario)
    eval_rng = RngStream(seed, Streams.EVALUATION)
    logger.info(f"{Emojis.START} {plan.algorithm} on '{scenario.name}': {plan.replications} replication(s), "
                f"{plan.trials} evaluation trials, seed {seed}")

    if plan.algorithm == Algorithms.GREEDY:
        evaluation = evaluate_greedy(env, plan.trials, eval_rng)
        return RunResult(plan, ComparisonRow.from_evaluation(plan.algorithm, evaluation))

    if plan.algorithm == Algorithms.DP:
        explicit = export_explicit(scenario)
        report = solve_two_phase(explicit)
        if not report.verdict.feasible:
            raise InfeasibleProblemError(report.verdict.magnitude)
        evaluation = mc_evaluate(env, ExportedPolicy(explicit, report.policy, env), plan.trials, eval_rng)
        exact = float(report.revenue.w_star[explicit.initial_state()])
        row = ComparisonRow.from_evaluation(plan.algorithm, evaluation, exact_value=exact)
        return RunResult(plan, row, snapshots=[dumps_report(report)])

    explicit = None
    if plan.algorithm == Algorithms.TWO_PHASE_SYNC:
        explicit = export_explicit(scenario)
    elif plan.config.reference:
        explicit = _try_export(scenario)

    records: List[TrialRecord] = []
    logs, snapshots = [], []
    updates = 0
    started = time.perf_counter()
    for r in range(plan.replications):
        policy, log, snapshot, count = _train_once(plan, scenario, env, explicit,
                                                   RngStream(seed, Streams.TRAIN + r))
        logs.append(log)
        snapshots.append(snapshot)
        updates += count
        evaluation = mc_evaluate(env, policy, plan.trials, eval_rng)
        offset = r * plan.trials
        records.extend(TrialRecord(offset + rec.trial, rec.total_reward, rec.total_constraint, rec.length)
                       for rec in evaluation.records)
    elapsed = time.perf_counter() - started
    logger.debug(f"⏱️  {plan.algorithm}: {plan.replications} replication(s) in {format_seconds(elapsed)}")
    wallclock = elapsed if settings.RECORD_WALLCLOCK else None

    row = ComparisonRow.from_evaluation(plan.algorithm, summarize(records), updates, wallclock)
    logger.info(f"{Emojis.STATS} {plan.algorithm}: reward {row.mean_reward:.6g} ± {row.reward_se:.3g}, "
                f"constraint {row.mean_constraint:.6g} ± {row.constraint_se:.3g}")
    return RunResult(plan, row, logs, snapshots)


def rows_frame(rows: Sequence[ComparisonRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(row) for row in rows], columns=ROW_COLUMNS)


def emit_curves(log: LearningLog, path: Union[str, Path]) -> Path:
    """One CSV row per evaluation checkpoint; missing measurements stay blank"""
    if len(log) == 0:
        raise PreconditionError("cannot emit curves from an empty learning log")
    return log.to_csv(path)


def run(plan: ExperimentPlan) -> RunResult:
    """execute() and write the comparison row, curves and policy snapshots under output_dir"""
    result = execute(plan)
    out = plan.output_dir
    out.mkdir(parents=True, exist_ok=True)
    stem = plan.algorithm

    result.paths["row"] = out / f"{stem}-row.csv"
    rows_frame([result.row]).to_csv(result.paths["row"], index=False, na_rep="")

    for r, log in enumerate(result.logs):
        if len(log):
            result.paths[f"curve-{r}"] = emit_curves(log, out / f"{stem}-curve-rep{r}.csv")
    for r, snapshot in enumerate(result.snapshots):
        path = out / (f"{stem}-policy-rep{r}.txt" if result.logs else f"{stem}-report.txt")
        path.write_text(snapshot, encoding="utf-8")
        result.paths[f"snapshot-{r}"] = path

    logger.info(f"{Emojis.SUCCESS} {stem}: artifacts written to {out}")
    return result


def compare(plans: Sequence[ExperimentPlan], out: Optional[Union[str, Path]] = None) -> Tuple[Path, List[ComparisonRow]]:
    """Run every plan and write one table sorted by mean reward, with a feasibility footer"""
    if len(plans) < 2:
        raise PreconditionError("compare needs at least two plans")
    scenarios = [load_scenario(plan.scenario_path) for plan in plans]
    digests = {scenario.digest() for scenario in scenarios}
    seeds = {plan.seed_for(scenario) for plan, scenario in zip(plans, scenarios)}
    trials = {plan.trials for plan in plans}
    if len(digests) > 1 or len(seeds) > 1 or len(trials) > 1:
        raise MismatchedScenarioError("compared plans must share one scenario, seed and trial count")

    rows = [run(plan).row for plan in plans]
    rows.sort(key=lambda row: -row.mean_reward)

    path = Path(out) if out is not None else plans[0].output_dir / "comparison.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    rows_frame(rows).to_csv(path, index=False, na_rep="")
    feasible = [row.algorithm for row in rows if row.feasible]
    with path.open("a", encoding="utf-8") as f:
        f.write(f"# feasible: {', '.join(feasible) if feasible else 'none'}\n")
    logger.info(f"{Emojis.STATS} Comparison of {len(rows)} algorithms written to {path}")
    return path, rows


def export_scenario(scenario_path: Union[str, Path], out: Union[str, Path]) -> Path:
    return write_model(export_explicit(load_scenario(scenario_path)), out)
