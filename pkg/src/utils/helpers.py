"""
General helper functions
"""

import math
from typing import List, Sequence, Tuple, TypeVar

import numpy as np

T = TypeVar('T')


def chunks(lst: Sequence[T], n: int) -> List[Sequence[T]]:
    """Split a sequence into chunks of size n"""
    return [lst[i * n:(i + 1) * n] for i in range((len(lst) + n - 1) // n)]


def format_seconds(seconds: float) -> str:
    """Format seconds into human-readable time"""
    if seconds < 60:
        return f"{seconds:.2f}s"
    elif seconds < 3600:
        minutes = int(seconds // 60)
        remaining_seconds = int(seconds % 60)
        return f"{minutes}m {remaining_seconds}s"
    else:
        hours = int(seconds // 3600)
        remaining_minutes = int((seconds % 3600) // 60)
        return f"{hours}h {remaining_minutes}m"


def mean_and_standard_error(values: Sequence[float]) -> Tuple[float, float]:
    """Arithmetic mean (pairwise summed, in the given order) and its standard error"""
    array = np.asarray(values, dtype=float)
    n = array.size
    if n == 0:
        raise ValueError("mean of an empty sample")

    mean = float(np.sum(array) / n)
    if n == 1:
        return mean, 0.0

    std = float(np.std(array, ddof=1))
    return mean, std / math.sqrt(n)


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip any double"""
    return format(float(value), ".17g")
