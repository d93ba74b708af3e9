"""
Lazily populated state-action tables keyed by (state key, action key)
"""

from collections import Counter
from typing import Dict, Hashable, Iterator, Tuple

from learning.schedule import StepSchedule, step_sizes
from oracle.report import format_key, format_record

Key = Tuple[Hashable, Hashable]


class LazyTable:
    """Single table with default 0 and per-key visit counts"""

    def __init__(self):
        self.values: Dict[Key, float] = {}
        self.visit_counts: Counter = Counter()

    def get(self, state: Hashable, action: Hashable) -> float:
        return self.values.get((state, action), 0.0)

    def visits(self, state: Hashable, action: Hashable) -> int:
        return self.visit_counts[(state, action)]

    def update(self, state: Hashable, action: Hashable, target: float, step: float) -> float:
        key = (state, action)
        current = self.values.get(key, 0.0)
        value = current + step * (target - current)
        self.values[key] = value
        self.visit_counts[key] += 1
        return value

    def snapshot(self) -> "LazyTable":
        copy = LazyTable()
        copy.values = dict(self.values)
        copy.visit_counts = Counter(self.visit_counts)
        return copy

    def dumps(self) -> str:
        lines = ["# table snapshot"]
        for state, action in sorted(self.values, key=lambda key: (format_key(key[0]), format_key(key[1]))):
            lines.append(format_record("pair", "state", format_key(state), "action", format_key(action),
                                       "value", self.get(state, action), "visits", self.visits(state, action)))
        return "\n".join(lines) + "\n"

    def __len__(self):
        return len(self.values)

    def __iter__(self) -> Iterator[Key]:
        return iter(self.values)


class LazyQPair:
    """The feasibility table Q and the revenue table H, updated together"""

    def __init__(self):
        self.q_table: Dict[Key, float] = {}
        self.h_table: Dict[Key, float] = {}
        self.visit_counts: Counter = Counter()

    def q(self, state: Hashable, action: Hashable) -> float:
        return self.q_table.get((state, action), 0.0)

    def h(self, state: Hashable, action: Hashable) -> float:
        return self.h_table.get((state, action), 0.0)

    def visits(self, state: Hashable, action: Hashable) -> int:
        return self.visit_counts[(state, action)]

    def update(self, state: Hashable, action: Hashable, q_target: float, h_target: float,
               schedule: StepSchedule) -> None:
        """Stochastic-approximation step: Q with zeta2, H with zeta1"""
        key = (state, action)
        zeta1, zeta2 = step_sizes(self.visit_counts[key], schedule)
        q_now = self.q_table.get(key, 0.0)
        h_now = self.h_table.get(key, 0.0)
        self.q_table[key] = q_now + zeta2 * (q_target - q_now)
        self.h_table[key] = h_now + zeta1 * (h_target - h_now)
        self.visit_counts[key] += 1

    def snapshot(self) -> "LazyQPair":
        copy = LazyQPair()
        copy.q_table = dict(self.q_table)
        copy.h_table = dict(self.h_table)
        copy.visit_counts = Counter(self.visit_counts)
        return copy

    def keys(self):
        return sorted(self.visit_counts, key=lambda key: (format_key(key[0]), format_key(key[1])))

    def dumps(self) -> str:
        lines = ["# table snapshot"]
        for state, action in self.keys():
            lines.append(format_record("pair", "state", format_key(state), "action", format_key(action),
                                       "q", self.q(state, action), "h", self.h(state, action),
                                       "visits", self.visits(state, action)))
        return "\n".join(lines) + "\n"

    def __len__(self):
        return len(self.visit_counts)
