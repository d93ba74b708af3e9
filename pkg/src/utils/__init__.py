"""
Utility functions and helpers for Bidshare
"""

from .constants import *
from .errors import *
from .validators import *
from .helpers import *

__all__ = [
    'ExitCodes',
    'Tolerances',
    'Limits',
    'Emojis',
    'Algorithms',
    'Streams',
    'DefaultSettings',
    'BidshareError',
    'ValidationError',
    'validate_positive_int',
    'validate_range',
    'validate_probability',
    'validate_probability_vector',
    'chunks',
    'format_seconds',
    'format_float',
    'mean_and_standard_error',
]
