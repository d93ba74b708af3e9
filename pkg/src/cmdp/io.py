"""
Line-oriented text format for ExplicitCmdp files.

    # explicit-cmdp v1
    state_count 3
    horizon_T 2
    initial_state 0
    absorbing 0 0 1
    stages 0 1 2                       (optional)
    pair <s> <a> reward <r> cost <d> next <s'>:<p> <s'>:<p> ...

Reals are printed with 17 significant digits so a write/read cycle is exact.
"""

import logging
from pathlib import Path
from typing import Dict, List, Union

from cmdp.model import ExplicitCmdp
from utils.errors import ScenarioParseError
from utils.helpers import format_float

logger = logging.getLogger(__name__)

HEADER = "# explicit-cmdp v1"


def dumps_model(model: ExplicitCmdp) -> str:
    lines = [
        HEADER,
        f"state_count {model.state_count}",
        f"horizon_T {model.horizon_T}",
        f"initial_state {model.initial}",
        "absorbing " + " ".join("1" if flag else "0" for flag in model.absorbing),
    ]
    if model.stages is not None:
        lines.append("stages " + " ".join(str(t) for t in model.stages))

    for s, a in model.pairs:
        entries = " ".join(f"{nxt}:{format_float(p)}" for nxt, p in model.transition[(s, a)].items())
        lines.append(f"pair {s} {a} reward {format_float(model.reward[(s, a)])} "
                     f"cost {format_float(model.constraint_cost_table[(s, a)])} next {entries}")
    return "\n".join(lines) + "\n"


def write_model(model: ExplicitCmdp, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_model(model), encoding="utf-8")
    logger.info(f"💾 Wrote {model!r} to {path}")
    return path


def loads_model(text: str) -> ExplicitCmdp:
    header: Dict[str, str] = {}
    action_sets: Dict[int, List[int]] = {}
    transition, reward, cost = {}, {}, {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        key = fields[0]
        try:
            if key == "pair":
                s, a = int(fields[1]), int(fields[2])
                if fields[3] != "reward" or fields[5] != "cost" or fields[7] != "next":
                    raise ValueError("expected 'reward', 'cost' and 'next' markers")
                reward[(s, a)] = float(fields[4])
                cost[(s, a)] = float(fields[6])
                row = {}
                for entry in fields[8:]:
                    nxt, p = entry.split(":")
                    row[int(nxt)] = float(p)
                transition[(s, a)] = row
                action_sets.setdefault(s, []).append(a)
            elif key in ("state_count", "horizon_T", "initial_state", "absorbing", "stages"):
                header[key] = " ".join(fields[1:])
            else:
                raise ValueError(f"unknown record '{key}'")
        except (IndexError, ValueError) as e:
            raise ScenarioParseError(f"line {number}: {e}") from e

    missing = [k for k in ("state_count", "horizon_T", "initial_state", "absorbing") if k not in header]
    if missing:
        raise ScenarioParseError(f"model file lacks {', '.join(missing)}")

    try:
        state_count = int(header["state_count"])
        absorbing = [field == "1" for field in header["absorbing"].split()]
        stages = [int(t) for t in header["stages"].split()] if "stages" in header else None
        if len(absorbing) != state_count:
            raise ValueError("absorbing flags do not match state_count")
        return ExplicitCmdp(
            state_count=state_count,
            action_sets=[action_sets.get(s, []) for s in range(state_count)],
            transition=transition,
            reward=reward,
            constraint_cost=cost,
            absorbing=absorbing,
            initial_state=int(header["initial_state"]),
            horizon_T=int(header["horizon_T"]),
            stages=stages,
        )
    except ValueError as e:
        raise ScenarioParseError(str(e)) from e


def read_model(path: Union[str, Path]) -> ExplicitCmdp:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read {path}: {e}") from e
    return loads_model(text)
