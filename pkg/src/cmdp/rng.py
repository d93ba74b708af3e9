"""
Counter-based, splittable random streams.

A stream is identified by (seed, stream_id) plus the ids of the streams it was
spawned from. Identical identities produce identical draws bit-for-bit, and
different identities are statistically independent (Philox keyed through a
SeedSequence).
"""

from typing import Optional, Sequence, Tuple

import numpy as np

U64 = 2 ** 64


class RngStream:
    """Single-owner mutable random stream"""

    def __init__(self, seed: int, stream_id: int = 0, lineage: Tuple[int, ...] = ()):
        if not 0 <= int(seed) < U64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not 0 <= int(stream_id) < U64:
            raise ValueError(f"stream_id must be a 64-bit unsigned integer, got {stream_id}")

        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.lineage = tuple(int(x) for x in lineage)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.lineage + (self.stream_id,))
        self._generator = np.random.Generator(np.random.Philox(sequence))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def spawn(self, sub_id: int) -> "RngStream":
        """Independent child stream; does not consume draws from this one"""
        return RngStream(self.seed, sub_id, self.lineage + (self.stream_id,))

    def random(self) -> float:
        return float(self._generator.random())

    def integers(self, high: int) -> int:
        """Uniform integer in [0, high)"""
        return int(self._generator.integers(high))

    def poisson(self, lam: float) -> int:
        return int(self._generator.poisson(lam))

    def categorical(self, probabilities: Sequence[float], size: Optional[int] = None):
        """Index (or array of indices) drawn from a finite distribution"""
        p = np.asarray(probabilities, dtype=float)
        if size is None:
            return int(self._generator.choice(p.size, p=p / p.sum()))
        return self._generator.choice(p.size, size=size, p=p / p.sum())

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, lineage={self.lineage})"
