"""
Fleet states and dispatch decisions.

A vehicle is a (station, remaining travel time) pair; tau = 0 means idle at
its station. Decisions are per station-pair counts: off the diagonal the
number of idle vehicles sent from j to j', on the diagonal the number that
stay at j (and may take round-trip customers).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from config.settings import settings
from utils.errors import EnumerationTooLargeError, InadmissibleDecisionError

logger = logging.getLogger(__name__)

Vehicle = Tuple[int, int]


@dataclass(frozen=True)
class FleetState:
    k: int
    q: Tuple[int, ...]
    tau: Tuple[int, ...]

    def __post_init__(self):
        if len(self.q) != len(self.tau):
            raise ValueError("q and tau must list the same vehicles")

    @classmethod
    def from_vehicles(cls, k: int, vehicles: Sequence[Vehicle], canonical: bool = True) -> "FleetState":
        vehicles = sorted(vehicles) if canonical else list(vehicles)
        return cls(k, tuple(int(q) for q, _ in vehicles), tuple(int(t) for _, t in vehicles))

    @property
    def vehicles(self) -> Tuple[Vehicle, ...]:
        return tuple(zip(self.q, self.tau))

    @property
    def size(self) -> int:
        return len(self.q)

    def canonical(self) -> "FleetState":
        return FleetState.from_vehicles(self.k, self.vehicles, canonical=True)

    def idle_vehicles(self, station: int) -> List[int]:
        """Indices of vehicles idle at ``station`` in vehicle order"""
        return [i for i, (q, t) in enumerate(self.vehicles) if q == station and t == 0]

    def idle_counts(self, stations: int) -> Tuple[int, ...]:
        counts = [0] * stations
        for q, t in self.vehicles:
            if t == 0:
                counts[q - 1] += 1
        return tuple(counts)

    def travel_mass(self) -> int:
        return sum(self.tau)


def utilization_cost(fleet: FleetState, d: float, horizon: int) -> float:
    """d - sum_i tau_i / (T*C), from the state before the transition"""
    return d - fleet.travel_mass() / (horizon * fleet.size)


def arrival_matrix(arrivals: Sequence[int], stations: int) -> List[List[int]]:
    """Row-major flat S*S counts to a nested [origin][destination] list"""
    return [list(arrivals[j * stations:(j + 1) * stations]) for j in range(stations)]


@dataclass(frozen=True)
class DispatchDecision:
    """counts[j-1][j'-1] vehicles idle at j sent to j' (diagonal: vehicles that stay)"""
    counts: Tuple[Tuple[int, ...], ...]

    @property
    def stations(self) -> int:
        return len(self.counts)

    @property
    def key(self) -> Tuple[int, ...]:
        """Off-diagonal counts in (j, j') order; all-stay is the smallest key"""
        s = self.stations
        return tuple(self.counts[j][k] for j in range(s) for k in range(s) if j != k)

    @classmethod
    def from_key(cls, key: Sequence[int], idle: Sequence[int]) -> "DispatchDecision":
        stations = len(idle)
        if len(key) != stations * (stations - 1):
            raise InadmissibleDecisionError(f"decision key {tuple(key)} does not fit {stations} stations")
        values = iter(key)
        counts = []
        for j in range(stations):
            row = [0 if k == j else int(next(values)) for k in range(stations)]
            row[j] = idle[j] - sum(row)
            counts.append(tuple(row))
        return cls(tuple(counts))

    @classmethod
    def stay(cls, fleet: FleetState, stations: int) -> "DispatchDecision":
        return cls.from_key((0,) * (stations * (stations - 1)), fleet.idle_counts(stations))

    def sent(self, origin: int, destination: int) -> int:
        return self.counts[origin - 1][destination - 1]

    def destinations(self, fleet: FleetState) -> List[int]:
        """Station each vehicle heads for, idle slots handed out in vehicle order and ascending destination"""
        target = list(fleet.q)
        for j in range(1, self.stations + 1):
            slots = iter(fleet.idle_vehicles(j))
            for k in range(1, self.stations + 1):
                if k == j:
                    continue
                for _ in range(self.sent(j, k)):
                    target[next(slots)] = k
        return target

    def vehicle_matrix(self, fleet: FleetState) -> List[Tuple[int, ...]]:
        """Per-vehicle one-hot destination rows"""
        return [tuple(1 if k == dest else 0 for k in range(1, self.stations + 1))
                for dest in self.destinations(fleet)]


def check_admissible(fleet: FleetState, decision: DispatchDecision, arrivals: Sequence[Sequence[int]]) -> None:
    """Raise InadmissibleDecisionError unless the counts respect arrivals and idle vehicles"""
    stations = decision.stations
    idle = fleet.idle_counts(stations)
    if len(arrivals) != stations:
        raise InadmissibleDecisionError(f"arrivals cover {len(arrivals)} stations, decision {stations}")
    for j in range(stations):
        row = decision.counts[j]
        if any(c < 0 for c in row):
            raise InadmissibleDecisionError(f"negative count at station {j + 1}")
        for k in range(stations):
            if k != j and row[k] > arrivals[j][k]:
                raise InadmissibleDecisionError(
                    f"{row[k]} vehicles sent {j + 1}->{k + 1} but only {arrivals[j][k]} bids arrived")
        if row[j] > idle[j]:
            raise InadmissibleDecisionError(f"{row[j]} vehicles stay at {j + 1} but only {idle[j]} are idle")
        if sum(row) != idle[j]:
            raise InadmissibleDecisionError(
                f"station {j + 1} assigns {sum(row)} destinations to {idle[j]} idle vehicles")

    rows = decision.vehicle_matrix(fleet)
    for i, ((q, tau), row) in enumerate(zip(fleet.vehicles, rows)):
        if sum(row) != 1:
            raise InadmissibleDecisionError(f"vehicle {i} has {sum(row)} destinations")
        if tau > 0 and row[q - 1] != 1:
            raise InadmissibleDecisionError(f"vehicle {i} is in transit to {q} and cannot be redirected")


def _station_options(idle: int, caps: Sequence[int]) -> List[Tuple[int, ...]]:
    """Send vectors c with c[k] <= caps[k] and sum(c) <= idle"""
    options = []
    for combo in itertools.product(*(range(min(cap, idle) + 1) for cap in caps)):
        if sum(combo) <= idle:
            options.append(combo)
    return options


@lru_cache(maxsize=1 << 16)
def decision_keys(idle: Tuple[int, ...], arrivals: Tuple[int, ...], limit: int) -> Tuple[Tuple[int, ...], ...]:
    """Every admissible decision key, sorted; raises when there are more than ``limit``"""
    stations = len(idle)
    matrix = arrival_matrix(arrivals, stations)
    per_station = []
    for j in range(stations):
        caps = [matrix[j][k] for k in range(stations) if k != j]
        per_station.append(_station_options(idle[j], caps) if idle[j] else [tuple(0 for _ in caps)])

    size = math.prod(len(options) for options in per_station)
    if size > limit:
        raise EnumerationTooLargeError("dispatch decisions", size, limit)
    return tuple(sorted(tuple(itertools.chain.from_iterable(choice)) for choice in itertools.product(*per_station)))


def admissible_decisions(fleet: FleetState, arrivals: Sequence[Sequence[int]],
                         limit: Optional[int] = None) -> Iterator[DispatchDecision]:
    """Enumerate every decision respecting the bid counts and the idle vehicles"""
    stations = len(arrivals)
    idle = fleet.idle_counts(stations)
    flat = tuple(int(n) for row in arrivals for n in row)
    for key in decision_keys(idle, flat, limit or settings.DECISION_LIMIT):
        yield DispatchDecision.from_key(key, idle)


def heuristic_keys(idle: Tuple[int, ...], arrivals: Tuple[int, ...],
                   preference: Sequence[Sequence[int]]) -> Tuple[Tuple[int, ...], ...]:
    """Reduced decision set: per station, fill destinations in preference order for every fleet share.

    ``preference[j]`` lists the destinations of station j+1 (1-based) best first.
    """
    stations = len(idle)
    matrix = arrival_matrix(arrivals, stations)
    per_station = []
    for j in range(stations):
        others = [k for k in range(stations) if k != j]
        fills = set()
        available = sum(matrix[j][k] for k in others)
        for share in range(min(idle[j], available) + 1):
            sent: Dict[int, int] = {k: 0 for k in others}
            left = share
            for dest in preference[j]:
                k = dest - 1
                if k == j or left == 0:
                    continue
                take = min(left, matrix[j][k])
                sent[k] = take
                left -= take
            fills.add(tuple(sent[k] for k in others))
        per_station.append(sorted(fills))
    return tuple(sorted(tuple(itertools.chain.from_iterable(choice)) for choice in itertools.product(*per_station)))
