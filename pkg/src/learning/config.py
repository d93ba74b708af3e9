"""
Learner configuration
"""

from dataclasses import dataclass, field
from typing import Optional

from learning.schedule import StepSchedule
from utils.constants import DefaultSettings
from utils.validators import validate_positive_int, validate_probability, validate_range


@dataclass(frozen=True)
class LearnerConfig:
    eps_feas_learn: float = DefaultSettings.EPS_FEAS_LEARN
    max_episodes: int = DefaultSettings.MAX_EPISODES
    eval_every: int = DefaultSettings.EVAL_EVERY
    exploration_epsilon: float = DefaultSettings.EXPLORATION_EPSILON
    schedule: StepSchedule = field(default_factory=StepSchedule)
    shrink_eps: bool = False
    eval_trials: int = DefaultSettings.EVAL_TRIALS
    eval_seed: Optional[int] = None

    def __post_init__(self):
        validate_range(self.eps_feas_learn, "eps_feas_learn", 0.0, float("inf"))
        validate_positive_int(self.max_episodes, "max_episodes")
        validate_positive_int(self.eval_every, "eval_every")
        validate_probability(self.exploration_epsilon, "exploration_epsilon")
        validate_positive_int(self.eval_trials, "eval_trials", min_val=0)

    @staticmethod
    def eps_for_threshold(d: float) -> float:
        """Default learning tolerance for a scenario with utilization threshold d"""
        return DefaultSettings.EPS_FEAS_LEARN * (1.0 + abs(d))
