"""
Scenario files: fleet dimensions, utilization threshold, initial placement and
the per-(station, time) demand, parsed strictly from JSON.
"""

import hashlib
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

import ujson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from rideshare.bids import CountFamily, DemandEntry
from utils.errors import ScenarioParseError

logger = logging.getLogger(__name__)


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    C: int = Field(ge=1)
    S: int = Field(ge=1)
    T: int = Field(ge=1)
    T_bar: int = Field(ge=1)
    F_bar: float = Field(gt=0)
    d: float = 0.0
    base_seed: Optional[int] = Field(None, ge=0, lt=2 ** 64)
    initial_placement: Tuple[Tuple[int, int], ...]
    demand: Tuple[Tuple[DemandEntry, ...], ...]
    count_family: CountFamily = "poisson"
    canonicalize: bool = True
    rank_weights: Optional[Tuple[Tuple[float, ...], ...]] = None
    name: str = ""

    @model_validator(mode="after")
    def _check_shapes(self):
        if not math.isfinite(self.d):
            raise ValueError("d must be finite")
        if len(self.initial_placement) != self.C:
            raise ValueError(f"initial_placement lists {len(self.initial_placement)} vehicles, C={self.C}")
        for station, tau in self.initial_placement:
            if not 1 <= station <= self.S:
                raise ValueError(f"initial station {station} outside 1..{self.S}")
            if not 0 <= tau <= self.T_bar:
                raise ValueError(f"initial tau {tau} outside 0..{self.T_bar}")

        if len(self.demand) != self.S or any(len(row) != self.T for row in self.demand):
            raise ValueError(f"demand must be a {self.S} x {self.T} array (station, time)")
        for j, row in enumerate(self.demand, start=1):
            for t, entry in enumerate(row):
                if len(entry.dest_probs) != self.S:
                    raise ValueError(f"demand[{j}][{t}].dest_probs needs {self.S} entries")
                if len(entry.duration_probs) != self.T_bar:
                    raise ValueError(f"demand[{j}][{t}].duration_probs needs {self.T_bar} entries")
                if entry.fare.family == "point" and abs(entry.fare.params["value"]) > self.F_bar:
                    raise ValueError(f"demand[{j}][{t}] fare exceeds F_bar={self.F_bar}")

        if self.rank_weights is not None:
            if len(self.rank_weights) != self.S or any(len(row) != self.T for row in self.rank_weights):
                raise ValueError(f"rank_weights must be a {self.S} x {self.T} array (station, time)")
            if any(w <= 0 for row in self.rank_weights for w in row):
                raise ValueError("rank weights must be positive")

        if self.T_bar > self.T:
            logger.warning(f"⚠️ Scenario '{self.name}': T_bar={self.T_bar} exceeds T={self.T}")
        return self

    def entry(self, station: int, t: int) -> DemandEntry:
        return self.demand[station - 1][t]

    def rank_weight(self, station: int, t: int) -> float:
        """Weight on the rank of bids toward ``station`` at time t.

        Bids toward one destination all share a weight, so it never changes
        which of them are accepted; it only trades destinations off against
        each other, in greedy dispatch and in the ranked-fill heuristic.
        """
        if self.rank_weights is None:
            return 1.0
        return self.rank_weights[station - 1][t]

    @property
    def stations(self) -> range:
        return range(1, self.S + 1)

    @property
    def is_discrete(self) -> bool:
        return all(entry.fare.is_discrete for row in self.demand for entry in row)

    def digest(self) -> str:
        """Fingerprint used to check that plans share one scenario"""
        return hashlib.sha256(self.model_dump_json(by_alias=True).encode("utf-8")).hexdigest()


def loads_scenario(text: str, name: str = "") -> Scenario:
    try:
        data = ujson.loads(text)
    except ValueError as e:
        raise ScenarioParseError(f"scenario {name or '<string>'} is not valid JSON: {e}") from e
    if isinstance(data, dict) and name and "name" not in data:
        data["name"] = name
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioParseError(f"scenario {name or '<string>'}: {e}") from e


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read scenario {path}: {e}") from e
    scenario = loads_scenario(text, path.stem)
    logger.info(f"📁 Loaded scenario '{scenario.name}': C={scenario.C}, S={scenario.S}, T={scenario.T}")
    return scenario


def scenario_files(directory: Union[str, Path]) -> List[Path]:
    return sorted(Path(directory).glob("*.json"))
