"""
Structured text for solver reports and table snapshots.

Every line is a record: a kind token followed by name/value pairs. Keys are
printed with repr() stripped of blanks, reals with 17 significant digits.
"""

import logging
from pathlib import Path
from typing import Hashable, List, Sequence, Union

from oracle.two_phase_dp import SolverReport
from utils.helpers import format_float

logger = logging.getLogger(__name__)


def format_key(key: Hashable) -> str:
    return repr(key).replace(" ", "")


def format_record(kind: str, *fields) -> str:
    """format_record("state", "id", 3, "v_star", -1.0) -> 'state id 3 v_star -1'"""
    parts = [kind]
    for value in fields:
        if isinstance(value, float):
            parts.append(format_float(value))
        else:
            parts.append(str(value))
    return " ".join(parts)


def format_series(kind: str, name: str, values: Sequence[float]) -> str:
    return " ".join([kind, name] + [format_float(v) for v in values])


def dumps_report(report: SolverReport) -> str:
    model = report.model
    verdict = report.verdict
    lines: List[str] = [
        "# two-phase solver report",
        format_record("verdict", verdict.status, "magnitude", float(verdict.magnitude),
                      "origin_value", float(verdict.value_at_origin), "eps_feas", float(verdict.eps_feas)),
    ]

    v_star = report.v_star.table
    w_star = report.revenue.w_star if report.revenue else None
    for s in range(model.state_count):
        fields = ["id", s, "label", format_key(model.label_of(s)), "v_star", float(v_star[s])]
        if w_star is not None:
            fields += ["w_star", float(w_star[s])]
        if report.feasible_sets is not None and not model.is_absorbing(s):
            fields += ["u_fs", report.feasible_sets.bitmask(s)]
        if report.policy is not None and not model.is_absorbing(s):
            fields += ["action", report.policy.action_of(s)]
        lines.append(format_record("state", *fields))

    if report.q_star is not None and report.revenue is not None:
        q_star, h_star = report.q_star.table, report.revenue.h_star
        for s, a in model.pairs:
            lines.append(format_record("pair", "state", s, "action", a,
                                       "q_star", q_star.get(s, a), "h_star", h_star.get(s, a)))

    lines.append(format_series("residuals", "fs", report.v_star.residuals))
    if report.q_star is not None:
        lines.append(format_series("residuals", "q", report.q_star.residuals))
    if report.revenue is not None:
        lines.append(format_series("residuals", "opt", report.revenue.residuals))
    return "\n".join(lines) + "\n"


def write_report(report: SolverReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(report), encoding="utf-8")
    logger.info(f"💾 Solver report written to {path}")
    return path
