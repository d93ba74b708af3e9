"""
Vehicle-sharing dynamics and the sampled-model view used by the learners.

Model states are plain tuples ``(k, vehicles, arrivals)``: the time counter,
the (canonical) fleet as (station, tau) pairs and the row-major S*S counts of
bids that arrived at time k. A synthetic market-open state with k = -1 and a
single no-op action draws the first arrivals, so the episode starts from one
deterministic state and the model horizon is T + 1. Every state with k = T is
the single absorbing END state. Bid durations and fares are drawn when the
decision is applied, conditionally on the arrival counts.
"""

import logging
import math
from functools import cached_property
from typing import Callable, Hashable, List, Optional, Sequence, Tuple

from cmdp.model import Step, Trajectory
from cmdp.rng import RngStream
from config.settings import settings
from rideshare.bids import (RentalBid, bid_probability, expected_rank, rank_bids, rank_value, sample_arrivals,
                            sample_trips)
from rideshare.fleet import (DispatchDecision, FleetState, arrival_matrix, check_admissible,
                             decision_keys, heuristic_keys, utilization_cost)
from rideshare.scenario import Scenario
from utils.errors import EnumerationTooLargeError, ModelValidationError

logger = logging.getLogger(__name__)

ROOT_K = -1
NO_OP: Tuple[int, ...] = ()

StateKey = Tuple[int, Tuple[Tuple[int, int], ...], Tuple[int, ...]]
BidsPerStation = Sequence[Sequence[RentalBid]]
DecideFn = Callable[..., DispatchDecision]


def bid_counts(bids: BidsPerStation, stations: int) -> List[List[int]]:
    return [[sum(1 for bid in station_bids if bid.destination == k) for k in range(1, stations + 1)]
            for station_bids in bids]


def env_step(scenario: Scenario, fleet: FleetState, decision: DispatchDecision, bids: BidsPerStation,
             rng: RngStream) -> Tuple[FleetState, float, float]:
    """Apply one dispatch decision; returns (next fleet, realized reward, constraint cost)"""
    if fleet.k >= scenario.T:
        return fleet, 0.0, 0.0

    stations = scenario.S
    check_admissible(fleet, decision, bid_counts(bids, stations))
    cost = utilization_cost(fleet, scenario.d, scenario.T)

    vehicles = [(q, tau - 1) if tau > 0 else (q, 0) for q, tau in fleet.vehicles]
    fares: List[float] = []

    for j in scenario.stations:
        slots = iter(fleet.idle_vehicles(j))
        for dest in scenario.stations:
            sent = decision.sent(j, dest) if dest != j else 0
            if sent == 0:
                continue
            accepted = rank_bids(bids[j - 1], dest, scenario.rank_weight(dest, fleet.k))[:sent]
            chosen = [next(slots) for _ in range(sent)]
            order = rng.permutation(sent) if sent > 1 else [0]
            for vehicle, pick in zip(chosen, order):
                bid = accepted[int(pick)]
                vehicles[vehicle] = (dest, bid.duration)
                fares.append(bid.fare)

        staying = list(slots)
        if not staying:
            continue
        weight = scenario.rank_weight(j, fleet.k)
        round_trips = [bid for bid in rank_bids(bids[j - 1], j, weight)[:len(staying)]
                       if rank_value(bid, j, weight) > 0]
        order = rng.permutation(len(staying)) if len(staying) > 1 else [0]
        for pick, bid in zip(order, round_trips):
            vehicles[staying[int(pick)]] = (j, bid.duration)
            fares.append(bid.fare)

    following = FleetState.from_vehicles(fleet.k + 1, vehicles, scenario.canonicalize)
    return following, math.fsum(fares), cost


def destination_preferences(scenario: Scenario) -> List[List[List[int]]]:
    """Per time and origin, destinations best first for the ranked-fill heuristic.

    A destination scores the expected rank of the bid served now plus the
    expected rank the vehicle can collect where it lands, both times the
    destination's rank weight.
    """
    outlook = [[bid_probability(scenario.entry(j, t), scenario.count_family)
                * expected_rank(scenario.entry(j, t), scenario.F_bar) for t in range(scenario.T)]
               for j in scenario.stations]
    preferences = []
    for t in range(scenario.T):
        per_origin = []
        for j in scenario.stations:
            entry = scenario.entry(j, t)
            now = expected_rank(entry, scenario.F_bar)
            landing = [(p, t + d) for d, p in enumerate(entry.duration_probs, start=1) if p > 0]

            def score(dest: int) -> float:
                later = math.fsum(p * outlook[dest - 1][k] for p, k in landing if k < scenario.T)
                return scenario.rank_weight(dest, t) * (now + later)

            per_origin.append(sorted(scenario.stations, key=lambda dest: (-score(dest), dest)))
        preferences.append(per_origin)
    return preferences


class VehicleSharingModel:
    """Sampled-model view of a scenario"""

    def __init__(self, scenario: Scenario, decision_limit: Optional[int] = None):
        self.scenario = scenario
        self.horizon_T = scenario.T + 1
        self.decision_limit = decision_limit or settings.DECISION_LIMIT
        initial = FleetState.from_vehicles(0, scenario.initial_placement, scenario.canonicalize)
        self.root: StateKey = (ROOT_K, initial.vehicles, ())
        self.end: StateKey = (scenario.T, (), ())
        self._heuristic_warned = False

    @cached_property
    def preferences(self) -> List[List[List[int]]]:
        return destination_preferences(self.scenario)

    # ----- state helpers -----

    @staticmethod
    def fleet_of(state: StateKey) -> FleetState:
        k, vehicles, _ = state
        return FleetState(k, tuple(q for q, _ in vehicles), tuple(t for _, t in vehicles))

    def arrivals_of(self, state: StateKey) -> List[List[int]]:
        return arrival_matrix(state[2], self.scenario.S)

    def arrive(self, k: int, vehicles: Tuple[Tuple[int, int], ...], rng: RngStream) -> StateKey:
        """State at time k after drawing the bid counts of every station"""
        if k >= self.scenario.T:
            return self.end
        arrivals: List[int] = []
        for j in self.scenario.stations:
            arrivals.extend(sample_arrivals(self.scenario.entry(j, k), rng, self.scenario.count_family))
        return (k, vehicles, tuple(arrivals))

    def draw_bids(self, state: StateKey, rng: RngStream) -> List[List[RentalBid]]:
        """Bid details for the counts held in the state, in destination order per station"""
        k = state[0]
        matrix = self.arrivals_of(state)
        bids = []
        for j in self.scenario.stations:
            entry = self.scenario.entry(j, k)
            station_bids: List[RentalBid] = []
            for dest in self.scenario.stations:
                station_bids.extend(sample_trips(entry, dest, matrix[j - 1][dest - 1], rng, self.scenario.F_bar))
            bids.append(station_bids)
        return bids

    # ----- sampled-model interface -----

    def initial_state(self) -> StateKey:
        return self.root

    def is_absorbing(self, state: StateKey) -> bool:
        return state[0] >= self.scenario.T

    def stage(self, state: StateKey) -> int:
        return min(state[0], self.scenario.T) + 1

    def admissible_actions(self, state: StateKey) -> Tuple[Tuple[int, ...], ...]:
        if state[0] == ROOT_K:
            return (NO_OP,)
        if self.is_absorbing(state):
            return (NO_OP,)
        idle = self.fleet_of(state).idle_counts(self.scenario.S)
        try:
            return decision_keys(idle, state[2], self.decision_limit)
        except EnumerationTooLargeError:
            if not self._heuristic_warned:
                logger.warning(f"⚠️ Decision sets exceed {self.decision_limit}; using the ranked-fill heuristic")
                self._heuristic_warned = True
            return heuristic_keys(idle, state[2], self.preferences[state[0]])

    def constraint_cost(self, state: StateKey, action: Hashable) -> float:
        if state[0] == ROOT_K or self.is_absorbing(state):
            return 0.0
        return utilization_cost(self.fleet_of(state), self.scenario.d, self.scenario.T)

    def expected_reward(self, state: StateKey, action: Hashable) -> None:
        return None

    def sample_successors(self, state: StateKey, action: Tuple[int, ...], rng: RngStream,
                          n: int) -> List[Tuple[StateKey, float]]:
        return [self._sample_next(state, action, rng) for _ in range(n)]

    def _sample_next(self, state: StateKey, action: Tuple[int, ...], rng: RngStream) -> Tuple[StateKey, float]:
        if state[0] == ROOT_K:
            return self.arrive(0, state[1], rng), 0.0
        fleet = self.fleet_of(state)
        decision = DispatchDecision.from_key(action, fleet.idle_counts(self.scenario.S))
        following, reward, _ = env_step(self.scenario, fleet, decision, self.draw_bids(state, rng), rng)
        return self.arrive(following.k, following.vehicles, rng), reward

    def decide_and_step(self, state: StateKey, decide: DecideFn,
                        rng: RngStream) -> Tuple[StateKey, Tuple[int, ...], float, float]:
        """Draw the bids, let ``decide(fleet, bids, scenario)`` choose from them, and apply the choice"""
        if state[0] == ROOT_K:
            return self.arrive(0, state[1], rng), NO_OP, 0.0, 0.0
        fleet = self.fleet_of(state)
        bids = self.draw_bids(state, rng)
        decision = decide(fleet, bids, self.scenario)
        following, reward, cost = env_step(self.scenario, fleet, decision, bids, rng)
        return self.arrive(following.k, following.vehicles, rng), decision.key, reward, cost

    def __repr__(self):
        s = self.scenario
        return f"VehicleSharingModel(C={s.C}, S={s.S}, T={s.T}, T_bar={s.T_bar})"


def bid_aware_trajectory(model: VehicleSharingModel, decide: DecideFn, rng: RngStream) -> Trajectory:
    """Rollout for decision rules that look at the realized bids; drop-in for mc_evaluate's rollout"""
    state = model.initial_state()
    steps: List[Step] = []
    while not model.is_absorbing(state):
        if len(steps) >= model.horizon_T:
            raise ModelValidationError(f"trajectory exceeded horizon_T={model.horizon_T}")
        following, action, reward, cost = model.decide_and_step(state, decide, rng)
        steps.append(Step(state, action, reward, cost))
        state = following
    return Trajectory(tuple(steps), state)
