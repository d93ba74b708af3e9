"""
Two-timescale step sizes driven by per-key visit counts
"""

from dataclasses import dataclass
from typing import Tuple

from utils.constants import DefaultSettings
from utils.validators import ValidationError, validate_positive_int, validate_range


@dataclass(frozen=True)
class StepSchedule:
    """zeta2 = (1+n)^-exponent_fast drives Q, zeta1 = (1+n)^-exponent_slow drives H"""
    exponent_fast: float = DefaultSettings.EXPONENT_FAST
    exponent_slow: float = DefaultSettings.EXPONENT_SLOW
    sample_batch_N: int = DefaultSettings.SAMPLE_BATCH

    def __post_init__(self):
        validate_range(self.exponent_fast, "exponent_fast", 0.5, 1.0, low_open=True)
        validate_range(self.exponent_slow, "exponent_slow", 0.5, 1.0, low_open=True)
        if self.exponent_slow <= self.exponent_fast:
            raise ValidationError("exponent_slow must exceed exponent_fast so that zeta1 = o(zeta2).")
        validate_positive_int(self.sample_batch_N, "sample_batch_N")


def step_sizes(visit_count: int, schedule: StepSchedule) -> Tuple[float, float]:
    """(zeta1, zeta2) for a key that has been updated visit_count times"""
    base = 1.0 + visit_count
    return base ** -schedule.exponent_slow, base ** -schedule.exponent_fast
