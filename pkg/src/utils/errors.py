"""
Exception hierarchy for Bidshare
"""

from utils.constants import ExitCodes


class BidshareError(Exception):
    """Base error; exit_code is what the CLI returns when it escapes"""
    exit_code = ExitCodes.FAILURE


class ModelValidationError(BidshareError):
    """An ExplicitCmdp or sampled model breaks its invariants"""


class PolicyUndefinedError(BidshareError):
    """A policy was queried at a state it has no action for"""

    def __init__(self, state):
        super().__init__(f"policy has no action at state {state!r}")
        self.state = state


class InfeasibleProblemError(BidshareError):
    """The constrained problem has no feasible policy"""
    exit_code = ExitCodes.INFEASIBLE

    def __init__(self, magnitude: float, message: str = ""):
        super().__init__(message or f"problem is infeasible, violation magnitude {magnitude:.6g}")
        self.magnitude = magnitude


class EnumerationTooLargeError(BidshareError):
    """An exhaustive enumeration would exceed its configured bound"""
    exit_code = ExitCodes.RESOURCE_BOUND

    def __init__(self, what: str, size: int, limit: int):
        super().__init__(f"{what}: {size} exceeds the limit of {limit}")
        self.size = size
        self.limit = limit


class NoConvergenceError(BidshareError):
    """A fixed-point iteration ran out of iterations"""

    def __init__(self, label: str, iterations: int, residual: float, tol: float):
        super().__init__(f"{label} did not converge in {iterations} iterations "
                         f"(residual {residual:.3e} > tol {tol:.3e})")
        self.iterations = iterations
        self.residual = residual


class EmptyFeasibleSetError(BidshareError):
    """No action passes the U_FS membership test at a state"""

    def __init__(self, state):
        super().__init__(f"no feasible action at state {state!r}")
        self.state = state


class NotEnumerableError(BidshareError):
    """A synchronous sweep needs a model whose states can be listed"""
    exit_code = ExitCodes.RESOURCE_BOUND


class InadmissibleDecisionError(BidshareError):
    """A dispatch decision violates the arrival or conservation constraints"""


class NonFiniteSupportError(BidshareError):
    """Exact export needs every distribution to have finite support"""
    exit_code = ExitCodes.RESOURCE_BOUND


class ScenarioParseError(BidshareError):
    """A scenario, config or model file could not be parsed"""
    exit_code = ExitCodes.PARSE_ERROR


class MismatchedScenarioError(BidshareError):
    """Plans in one comparison do not share scenario and evaluation seed"""


class PreconditionError(BidshareError):
    """An operation was called with inputs outside its contract"""
