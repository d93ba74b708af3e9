"""
Constants used throughout Bidshare
"""


class ExitCodes:
    """Process exit codes returned by the CLI"""
    SUCCESS = 0
    FAILURE = 1
    INFEASIBLE = 2
    PARSE_ERROR = 3
    RESOURCE_BOUND = 4


class Tolerances:
    """Absolute tolerances for floating comparisons"""
    VALIDATION = 1e-12
    PROBABILITY_VECTOR = 1e-9
    FEASIBILITY = 1e-9
    DP = 1e-10
    POISSON_TAIL = 1e-9


class Limits:
    """Enumeration and sizing bounds"""
    BRUTE_FORCE_POLICIES = 10 ** 6
    BRUTE_FORCE_BLOCK = 1 << 14
    DECISIONS = 10 ** 5
    EXPORT_STATES = 5 * 10 ** 4
    SYNC_PAIRS = 10 ** 5
    FLOAT_DIGITS = 17


class Emojis:
    """Emoji markers used in log lines"""
    SUCCESS = "✅"
    ERROR = "❌"
    WARNING = "⚠️"
    INFO = "ℹ️"
    LOADING = "⏳"
    STATS = "📊"
    FILE = "📁"
    START = "🚀"


class Algorithms:
    """Algorithm tokens accepted by the bench harness"""
    TWO_PHASE_SYNC = "two-phase-sync"
    TWO_PHASE_ASYNC = "two-phase-async"
    DP = "dp"
    VANILLA = "vanilla"
    PENALIZED = "penalized"
    LAGRANGIAN = "lagrangian"
    GREEDY = "greedy"

    ALL = (TWO_PHASE_SYNC, TWO_PHASE_ASYNC, DP, VANILLA, PENALIZED, LAGRANGIAN, GREEDY)


class Streams:
    """Reserved stream ids so training and evaluation never share draws"""
    TRAIN = 1
    EVALUATION = 2 ** 32
    CHECKPOINT = 2 ** 33
    GRID = 2 ** 34


class DefaultSettings:
    """Default learner settings"""
    EXPONENT_FAST = 0.55
    EXPONENT_SLOW = 0.85
    SAMPLE_BATCH = 10
    EXPLORATION_EPSILON = 0.1
    EPS_FEAS_LEARN = 0.05
    MAX_EPISODES = 1000
    EVAL_EVERY = 100
    EVAL_TRIALS = 100
    MULTIPLIER_STEP_EXPONENT = 1.0
    PENALTY_WEIGHTS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0)
