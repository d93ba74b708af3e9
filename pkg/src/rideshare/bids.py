"""
Rental bids, per-(station, time) demand and the price-to-travel-time ranking
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator
from scipy import stats

from cmdp.rng import RngStream
from utils.constants import Tolerances
from utils.errors import NonFiniteSupportError

logger = logging.getLogger(__name__)

UNRANKED = -math.inf
DEFAULT_GRID_STEP = 0.01

FareFamily = Literal["point", "two_point", "uniform", "triangular", "normal"]
CountFamily = Literal["poisson", "fixed"]

FARE_PARAMS = {
    "point": {"value"},
    "two_point": {"low", "high", "p_high"},
    "uniform": {"low", "high"},
    "triangular": {"low", "mode", "high"},
    "normal": {"mean", "sd"},
}


@dataclass(frozen=True)
class RentalBid:
    """Request to rent a vehicle to ``destination`` for ``duration`` slots at ``fare``"""
    destination: int
    duration: int
    fare: float

    def __post_init__(self):
        if self.destination < 1:
            raise ValueError(f"bid destination must be a station index >= 1, got {self.destination}")
        if self.duration < 1:
            raise ValueError(f"bid duration must be positive, got {self.duration}")


def rank_value(bid: RentalBid, target: int, weight: float = 1.0) -> float:
    """F/T_dur for nonnegative fares, F*T_dur for negative ones, -inf toward another station"""
    if bid.destination != target:
        return UNRANKED
    if bid.fare >= 0:
        return weight * bid.fare / bid.duration
    return weight * bid.fare * bid.duration


def rank_bids(bids: Sequence[RentalBid], target: int, weight: float = 1.0) -> List[RentalBid]:
    """Bids toward ``target`` by descending rank; ties go to higher fare, then shorter trips, then arrival order"""
    ranked = [(rank_value(bid, target, weight), i, bid) for i, bid in enumerate(bids)]
    ranked = [entry for entry in ranked if entry[0] != UNRANKED]
    ranked.sort(key=lambda entry: (-entry[0], -entry[2].fare, entry[2].duration, entry[1]))
    return [bid for _, _, bid in ranked]


class FareSpec(BaseModel):
    """Fare law truncated to [-F_bar, F_bar]; grid_step > 0 discretizes it"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: FareFamily = "point"
    params: Dict[str, float] = Field(default_factory=lambda: {"value": 0.0})
    grid_step: float = DEFAULT_GRID_STEP

    _supports: Dict[float, tuple] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_params(self):
        expected = FARE_PARAMS[self.family]
        if set(self.params) != expected:
            raise ValueError(f"fare family '{self.family}' takes parameters {sorted(expected)}, "
                             f"got {sorted(self.params)}")
        if self.grid_step < 0:
            raise ValueError("grid_step must be nonnegative")
        p = self.params
        if self.family == "two_point" and not 0.0 <= p["p_high"] <= 1.0:
            raise ValueError("two_point p_high must be a probability")
        if self.family in ("uniform", "triangular") and p["low"] > p["high"]:
            raise ValueError(f"{self.family} fare needs low <= high")
        if self.family == "triangular" and not p["low"] <= p["mode"] <= p["high"]:
            raise ValueError("triangular fare needs low <= mode <= high")
        if self.family == "normal" and p["sd"] <= 0:
            raise ValueError("normal fare needs a positive sd")
        return self

    @property
    def is_discrete(self) -> bool:
        return self.family in ("point", "two_point") or self.grid_step > 0

    def _snap(self, value: float, bound: float) -> float:
        value = min(max(value, -bound), bound)
        if self.grid_step > 0:
            value = round(round(value / self.grid_step) * self.grid_step, 10)
        return value

    def support(self, bound: float) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """(fares, probabilities) of the discretized law; raises for continuous families"""
        if not self.is_discrete:
            raise NonFiniteSupportError(f"fare family '{self.family}' with grid_step=0 has no finite support")
        p = self.params
        if self.family == "point":
            masses = {self._snap(p["value"], bound): 1.0}
        elif self.family == "two_point":
            masses: Dict[float, float] = {}
            for value, mass in ((p["low"], 1.0 - p["p_high"]), (p["high"], p["p_high"])):
                if mass > 0:
                    key = self._snap(value, bound)
                    masses[key] = masses.get(key, 0.0) + mass
        else:
            masses = self._cell_masses(bound)

        fares = tuple(sorted(masses))
        total = math.fsum(masses.values())
        return fares, tuple(masses[f] / total for f in fares)

    def _law(self):
        p = self.params
        if self.family == "uniform":
            return stats.uniform(loc=p["low"], scale=p["high"] - p["low"])
        if self.family == "triangular":
            width = p["high"] - p["low"]
            return stats.triang(c=(p["mode"] - p["low"]) / width, loc=p["low"], scale=width)
        return stats.norm(loc=p["mean"], scale=p["sd"])

    def _cell_masses(self, bound: float) -> Dict[float, float]:
        p = self.params
        low, high = (-bound, bound) if self.family == "normal" else (max(p["low"], -bound), min(p["high"], bound))
        if self.family != "normal" and p["low"] == p["high"]:
            return {self._snap(p["low"], bound): 1.0}
        step = self.grid_step
        points = np.arange(math.ceil(low / step - 1e-9), math.floor(high / step + 1e-9) + 1) * step
        law = self._law()
        edges_low = np.maximum(points - step / 2, low)
        edges_high = np.minimum(points + step / 2, high)
        cells = law.cdf(edges_high) - law.cdf(edges_low)
        masses = {}
        for point, mass in zip(points, cells):
            if mass > 0:
                key = self._snap(float(point), bound)
                masses[key] = masses.get(key, 0.0) + float(mass)
        if not masses:
            masses[self._snap(float(law.mean()), bound)] = 1.0
        return masses

    def sample(self, rng: RngStream, bound: float) -> float:
        if self.is_discrete:
            fares, probs = self._cached_support(bound)
            return fares[rng.categorical(probs)]
        p = self.params
        gen = rng.generator
        if self.family == "uniform":
            return float(gen.uniform(max(p["low"], -bound), min(p["high"], bound)))
        if self.family == "triangular":
            if p["low"] == p["high"]:
                return p["low"]
            return min(max(float(gen.triangular(p["low"], p["mode"], p["high"])), -bound), bound)
        a, b = (-bound - p["mean"]) / p["sd"], (bound - p["mean"]) / p["sd"]
        return float(stats.truncnorm.rvs(a, b, loc=p["mean"], scale=p["sd"], random_state=gen))

    def signed_means(self, bound: float) -> Tuple[float, float]:
        """(E[max(F, 0)], E[min(F, 0)]) of the fare law truncated to [-bound, bound]"""
        if self.is_discrete:
            fares, probs = self._cached_support(bound)
            return (math.fsum(p * max(f, 0.0) for f, p in zip(fares, probs)),
                    math.fsum(p * min(f, 0.0) for f, p in zip(fares, probs)))
        p = self.params
        low, high = (-bound, bound) if self.family == "normal" else (max(p["low"], -bound), min(p["high"], bound))
        if low >= high:
            return max(low, 0.0), min(low, 0.0)
        law = self._law()
        return (float(law.expect(lambda f: max(f, 0.0), lb=low, ub=high, conditional=True)),
                float(law.expect(lambda f: min(f, 0.0), lb=low, ub=high, conditional=True)))

    def _cached_support(self, bound: float):
        if bound not in self._supports:
            self._supports[bound] = self.support(bound)
        return self._supports[bound]


class DemandEntry(BaseModel):
    """Bid process of one station at one time slot"""
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    rate: float = Field(0.0, alias="lambda", ge=0.0)
    dest_probs: Tuple[float, ...]
    duration_probs: Tuple[float, ...]
    fare: FareSpec = Field(default_factory=FareSpec)

    @field_validator("rate")
    @classmethod
    def _finite_rate(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("arrival rate must be finite")
        return value

    @field_validator("dest_probs", "duration_probs")
    @classmethod
    def _probability_vector(cls, values: Tuple[float, ...]) -> Tuple[float, ...]:
        if not values or any(p < 0 for p in values):
            raise ValueError("probabilities must be a nonempty vector of nonnegative numbers")
        if abs(math.fsum(values) - 1.0) > Tolerances.PROBABILITY_VECTOR:
            raise ValueError(f"probabilities sum to {math.fsum(values)!r}, not 1")
        return tuple(float(p) for p in values)


def draw_count(entry: DemandEntry, family: CountFamily, rng: RngStream) -> int:
    if family == "fixed":
        return int(round(entry.rate))
    return rng.poisson(entry.rate)


def bid_probability(entry: DemandEntry, family: CountFamily) -> float:
    """Probability that at least one bid arrives"""
    if family == "fixed":
        return 1.0 if int(round(entry.rate)) >= 1 else 0.0
    return -math.expm1(-entry.rate)


def expected_rank(entry: DemandEntry, fare_bound: float) -> float:
    """Mean rank value of one bid of ``entry`` toward the destination it names"""
    durations = np.arange(1, len(entry.duration_probs) + 1, dtype=float)
    probs = np.asarray(entry.duration_probs)
    gain, loss = entry.fare.signed_means(fare_bound)
    return gain * float(probs @ (1.0 / durations)) + loss * float(probs @ durations)


def sample_bids(entry: DemandEntry, rng: RngStream, fare_bound: float,
                count_family: CountFamily = "poisson") -> List[RentalBid]:
    """Poisson (or fixed) number of bids, each with independent destination, duration and fare.

    Takes the demand entry of one (station, time) slot, i.e.
    ``scenario.entry(j, t)``, rather than the slot coordinates and the whole
    demand table. Draws the count first, then destination, duration and fare
    per bid in arrival order.
    """
    count = draw_count(entry, count_family, rng)
    bids = []
    for _ in range(count):
        destination = 1 + rng.categorical(entry.dest_probs)
        duration = 1 + rng.categorical(entry.duration_probs)
        bids.append(RentalBid(destination, duration, entry.fare.sample(rng, fare_bound)))
    return bids


def sample_arrivals(entry: DemandEntry, rng: RngStream, count_family: CountFamily = "poisson") -> Tuple[int, ...]:
    """Number of bids toward each station; same law as counting the destinations of sample_bids"""
    count = draw_count(entry, count_family, rng)
    if count == 0:
        return (0,) * len(entry.dest_probs)
    return tuple(int(n) for n in rng.generator.multinomial(count, entry.dest_probs))


def sample_trips(entry: DemandEntry, destination: int, count: int, rng: RngStream,
                 fare_bound: float) -> List[RentalBid]:
    """``count`` bids toward a known destination, durations and fares drawn independently"""
    return [RentalBid(destination, 1 + rng.categorical(entry.duration_probs), entry.fare.sample(rng, fare_bound))
            for _ in range(count)]


def trip_support(entry: DemandEntry, fare_bound: float) -> List[Tuple[Tuple[int, float], float]]:
    """Finite joint support of (duration, fare) with probabilities"""
    fares, fare_probs = entry.fare.support(fare_bound)
    support = []
    for d, p_d in enumerate(entry.duration_probs, start=1):
        if p_d <= 0:
            continue
        for fare, p_f in zip(fares, fare_probs):
            if p_f > 0:
                support.append(((d, fare), p_d * p_f))
    return support


def count_support(entry: DemandEntry, family: CountFamily,
                  tail: float = Tolerances.POISSON_TAIL) -> List[Tuple[int, float]]:
    """Bid-count pmf; the Poisson tail beyond the cutoff is folded into the largest count"""
    if family == "fixed" or entry.rate == 0:
        return [(int(round(entry.rate)) if family == "fixed" else 0, 1.0)]
    law = stats.poisson(entry.rate)
    top = int(law.ppf(1.0 - tail))
    while law.sf(top) >= tail:
        top += 1
    masses = [float(law.pmf(n)) for n in range(top + 1)]
    masses[-1] += float(law.sf(top))
    return list(enumerate(masses))