"""
Input validation utilities
"""

import math
from typing import Optional, Sequence

from utils.constants import Tolerances
from utils.errors import BidshareError


class ValidationError(BidshareError, ValueError):
    """Custom validation error"""
    pass


def validate_positive_int(value, name: str, min_val: int = 1, max_val: Optional[int] = None) -> int:
    """Validate and convert integer input"""
    try:
        int_value = int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: '{value}' is not a valid integer.")

    if int_value != value and not isinstance(value, str):
        raise ValidationError(f"{name}: '{value}' is not an integer.")

    if int_value < min_val:
        raise ValidationError(f"{name} must be at least {min_val}.")

    if max_val is not None and int_value > max_val:
        raise ValidationError(f"{name} must be at most {max_val}.")

    return int_value


def validate_range(value: float, name: str, low: float, high: float,
                   low_open: bool = False, high_open: bool = False) -> float:
    """Validate that a real lies in an interval"""
    value = float(value)
    if math.isnan(value):
        raise ValidationError(f"{name} must not be NaN.")

    too_low = value <= low if low_open else value < low
    too_high = value >= high if high_open else value > high
    if too_low or too_high:
        left = "(" if low_open else "["
        right = ")" if high_open else "]"
        raise ValidationError(f"{name}={value} must lie in {left}{low}, {high}{right}.")

    return value


def validate_probability(value: float, name: str) -> float:
    """Validate a probability in [0, 1]"""
    return validate_range(value, name, 0.0, 1.0)


def validate_probability_vector(values: Sequence[float], name: str,
                                tol: float = Tolerances.PROBABILITY_VECTOR) -> tuple:
    """Validate a finite distribution: nonnegative entries summing to one"""
    if len(values) == 0:
        raise ValidationError(f"{name} must not be empty.")

    vector = tuple(float(v) for v in values)
    if any(v < 0 or math.isnan(v) for v in vector):
        raise ValidationError(f"{name} has a negative or NaN entry.")

    total = math.fsum(vector)
    if abs(total - 1.0) > tol:
        raise ValidationError(f"{name} sums to {total!r}, expected 1 within {tol}.")

    return vector
