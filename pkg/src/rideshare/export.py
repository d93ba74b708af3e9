"""
Exact ExplicitCmdp export of small scenarios.

Breadth-first enumeration from the market-open state over canonical states,
admissible decisions and every bid realization. Bid counts come from the
Poisson pmf (tail folded into the largest count) or the fixed count;
destinations are multinomial; the accepted trips of each station-pair are
enumerated as multisets of (duration, fare) outcomes.
"""

import itertools
import logging
import math
from collections import Counter, deque
from typing import Dict, List, Optional, Tuple

from scipy import stats

from cmdp.model import ExplicitCmdp, require_valid
from config.settings import settings
from rideshare.bids import RentalBid, count_support, rank_bids, rank_value, trip_support
from rideshare.environment import NO_OP, StateKey, VehicleSharingModel
from rideshare.fleet import DispatchDecision
from rideshare.scenario import Scenario
from utils.errors import EnumerationTooLargeError, ModelValidationError, NonFiniteSupportError

logger = logging.getLogger(__name__)

Distribution = Dict[tuple, float]


def _compositions(n: int, parts: int):
    """Count vectors of n items over ``parts`` bins"""
    for combo in itertools.combinations_with_replacement(range(parts), n):
        counts = [0] * parts
        for i in combo:
            counts[i] += 1
        yield tuple(counts)


def _multinomial(counts: Tuple[int, ...], probs) -> float:
    n = sum(counts)
    if n == 0:
        return 1.0
    return float(stats.multinomial.pmf(counts, n, probs))


def _product(distributions: List[Distribution]) -> Distribution:
    """Distribution of the concatenation of independent tuple-valued outcomes"""
    joint: Distribution = {(): 1.0}
    for dist in distributions:
        merged: Distribution = {}
        for head, p in joint.items():
            for tail, q in dist.items():
                key = head + tail
                merged[key] = merged.get(key, 0.0) + p * q
        joint = merged
    return joint


class ScenarioExporter:
    def __init__(self, scenario: Scenario, state_limit: Optional[int] = None):
        if not scenario.is_discrete:
            raise NonFiniteSupportError("every fare family needs a finite grid (grid_step > 0) to export")
        if not scenario.canonicalize:
            raise ModelValidationError("export enumerates canonical states; enable canonicalize")
        self.scenario = scenario
        self.model = VehicleSharingModel(scenario)
        self.state_limit = state_limit or settings.EXPORT_STATE_LIMIT
        self._arrivals: Dict[int, Distribution] = {}
        self._groups: Dict[tuple, Tuple[Dict[Tuple[int, ...], float], float]] = {}

    # ----- bid realizations -----

    def arrivals(self, t: int) -> Distribution:
        """Joint law of the flat S*S arrival counts at time t"""
        if t not in self._arrivals:
            per_station = []
            for j in self.scenario.stations:
                entry = self.scenario.entry(j, t)
                dist: Distribution = {}
                for n, p_n in count_support(entry, self.scenario.count_family):
                    for counts in _compositions(n, self.scenario.S):
                        p = p_n * _multinomial(counts, entry.dest_probs)
                        if p > 0:
                            dist[counts] = dist.get(counts, 0.0) + p
                per_station.append(dist)
            self._arrivals[t] = _product(per_station)
        return self._arrivals[t]

    def accepted_trips(self, origin: int, t: int, dest: int, arrived: int,
                       slots: int) -> Tuple[Dict[Tuple[int, ...], float], float]:
        """(law of the sorted accepted durations, expected accepted fare) for one station-pair"""
        key = (origin, t, dest, arrived, slots)
        if key in self._groups:
            return self._groups[key]

        entry = self.scenario.entry(origin, t)
        support = trip_support(entry, self.scenario.F_bar)
        probs = [p for _, p in support]
        weight = self.scenario.rank_weight(dest, t)
        durations: Dict[Tuple[int, ...], float] = {}
        expected_fare = []

        for combo in itertools.combinations_with_replacement(range(len(support)), arrived):
            multiplicity = Counter(combo)
            p = _multinomial(tuple(multiplicity.get(i, 0) for i in range(len(support))), probs)
            if p <= 0:
                continue
            bids = [RentalBid(dest, support[i][0][0], support[i][0][1]) for i in combo]
            accepted = rank_bids(bids, dest, weight)[:slots]
            if dest == origin:
                accepted = [bid for bid in accepted if rank_value(bid, dest, weight) > 0]
            outcome = tuple(sorted(bid.duration for bid in accepted))
            durations[outcome] = durations.get(outcome, 0.0) + p
            expected_fare.append(p * math.fsum(bid.fare for bid in accepted))

        self._groups[key] = (durations, math.fsum(expected_fare))
        return self._groups[key]

    # ----- one decision -----

    def outcome(self, state: StateKey, action: Tuple[int, ...]) -> Tuple[Distribution, float]:
        """(law of the next state, expected reward) for a transient state and decision"""
        scenario = self.scenario
        k, vehicles, _ = state
        fleet = self.model.fleet_of(state)
        matrix = self.model.arrivals_of(state)
        decision = DispatchDecision.from_key(action, fleet.idle_counts(scenario.S))

        base = tuple((q, tau - 1) for q, tau in vehicles if tau > 0)
        groups: List[Distribution] = []
        reward_terms = []
        for j in scenario.stations:
            for dest in scenario.stations:
                slots = decision.sent(j, dest)
                if slots == 0:
                    continue
                trips, fare = self.accepted_trips(j, k, dest, matrix[j - 1][dest - 1], slots)
                reward_terms.append(fare)
                dist: Distribution = {}
                for durations, p in trips.items():
                    padded = durations + (0,) * (slots - len(durations))
                    rows = tuple((dest, d) for d in padded)
                    dist[rows] = dist.get(rows, 0.0) + p
                groups.append(dist)

        fleets: Distribution = {}
        for rows, p in _product(groups).items():
            following = tuple(sorted(base + rows))
            fleets[following] = fleets.get(following, 0.0) + p

        successors: Distribution = {}
        for following, p in fleets.items():
            if k + 1 >= scenario.T:
                successors[self.model.end] = successors.get(self.model.end, 0.0) + p
                continue
            for arrivals, q in self.arrivals(k + 1).items():
                nxt = (k + 1, following, arrivals)
                successors[nxt] = successors.get(nxt, 0.0) + p * q
        return successors, math.fsum(reward_terms)

    def root_outcome(self) -> Distribution:
        root = self.model.root
        return {(0, root[1], arrivals): p for arrivals, p in self.arrivals(0).items()}

    # ----- breadth-first export -----

    def export(self) -> ExplicitCmdp:
        model = self.model
        root, end = model.root, model.end
        index: Dict[StateKey, int] = {root: 0}
        order: List[StateKey] = [root]
        rows: Dict[Tuple[int, Tuple[int, ...]], Distribution] = {}
        rewards: Dict[Tuple[int, Tuple[int, ...]], float] = {}
        actions_of: Dict[StateKey, Tuple[Tuple[int, ...], ...]] = {}
        queue = deque([root])

        while queue:
            state = queue.popleft()
            actions = model.admissible_actions(state)
            actions_of[state] = actions
            for action in actions:
                if state == root:
                    successors, reward = self.root_outcome(), 0.0
                else:
                    successors, reward = self.outcome(state, action)
                rows[(index[state], action)] = successors
                rewards[(index[state], action)] = reward
                for nxt in successors:
                    if nxt != end and nxt not in index:
                        index[nxt] = len(order)
                        order.append(nxt)
                        queue.append(nxt)
                        if len(order) + 1 > self.state_limit:
                            raise EnumerationTooLargeError("canonical states", len(order) + 1, self.state_limit)

        index[end] = len(order)
        order.append(end)
        actions_of[end] = (NO_OP,)

        transition, reward, cost = {}, {}, {}
        for s, state in enumerate(order):
            for a, action in enumerate(actions_of[state]):
                if state == end:
                    transition[(s, a)] = {s: 1.0}
                    reward[(s, a)] = 0.0
                    cost[(s, a)] = 0.0
                    continue
                row: Dict[int, float] = {}
                for nxt, p in rows[(s, action)].items():
                    if p > 0:
                        row[index[nxt]] = row.get(index[nxt], 0.0) + p
                total = math.fsum(row.values())
                transition[(s, a)] = {nxt: p / total for nxt, p in row.items()}
                reward[(s, a)] = rewards[(s, action)]
                cost[(s, a)] = model.constraint_cost(state, action)

        explicit = ExplicitCmdp(
            state_count=len(order),
            action_sets=[range(len(actions_of[state])) for state in order],
            transition=transition,
            reward=reward,
            constraint_cost=cost,
            absorbing=[state == end for state in order],
            initial_state=0,
            horizon_T=model.horizon_T,
            stages=[model.stage(state) for state in order],
            state_labels=order,
            action_labels=[actions_of[state] for state in order],
        )
        require_valid(explicit)
        logger.info(f"✅ Exported {explicit!r}")
        return explicit


def export_explicit(scenario: Scenario, state_limit: Optional[int] = None) -> ExplicitCmdp:
    return ScenarioExporter(scenario, state_limit).export()
