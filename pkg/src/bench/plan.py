"""
Experiment plans and the JSON experiment configuration behind ``--config``
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import ujson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from baselines.lagrangian import DEFAULT_TIE_TOLERANCE, LagrangeState
from config.settings import settings
from learning.config import LearnerConfig
from learning.schedule import StepSchedule
from rideshare.scenario import Scenario
from utils.constants import Algorithms, DefaultSettings
from utils.errors import ScenarioParseError
from utils.validators import ValidationError as ArgumentError
from utils.validators import validate_positive_int

logger = logging.getLogger(__name__)


class LearnerSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eps_feas_learn: Optional[float] = Field(None, ge=0)
    max_episodes: int = Field(DefaultSettings.MAX_EPISODES, ge=1)
    eval_every: int = Field(DefaultSettings.EVAL_EVERY, ge=1)
    eval_trials: int = Field(DefaultSettings.EVAL_TRIALS, ge=0)
    exploration_epsilon: float = Field(DefaultSettings.EXPLORATION_EPSILON, ge=0, le=1)
    exponent_fast: float = DefaultSettings.EXPONENT_FAST
    exponent_slow: float = DefaultSettings.EXPONENT_SLOW
    sample_batch_N: int = Field(DefaultSettings.SAMPLE_BATCH, ge=1)
    shrink_eps: bool = False


class PenaltySettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weights: Tuple[float, ...] = DefaultSettings.PENALTY_WEIGHTS


class LagrangeSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    multiplier_init: float = Field(0.0, ge=0)
    step_exponent: float = Field(DefaultSettings.MULTIPLIER_STEP_EXPONENT, gt=0)
    tie_tolerance: float = Field(DEFAULT_TIE_TOLERANCE, ge=0)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learner: LearnerSettings = Field(default_factory=LearnerSettings)
    penalty: PenaltySettings = Field(default_factory=PenaltySettings)
    lagrange: LagrangeSettings = Field(default_factory=LagrangeSettings)
    reference: bool = False

    def learner_config(self, d: float) -> LearnerConfig:
        """LearnerConfig with the learning tolerance defaulting to 0.05 * (1 + |d|)"""
        s = self.learner
        eps = s.eps_feas_learn if s.eps_feas_learn is not None else LearnerConfig.eps_for_threshold(d)
        return LearnerConfig(
            eps_feas_learn=eps,
            max_episodes=s.max_episodes,
            eval_every=s.eval_every,
            exploration_epsilon=s.exploration_epsilon,
            schedule=StepSchedule(s.exponent_fast, s.exponent_slow, s.sample_batch_N),
            shrink_eps=s.shrink_eps,
            eval_trials=s.eval_trials,
        )

    def lagrange_state(self) -> LagrangeState:
        return LagrangeState(self.lagrange.multiplier_init, self.lagrange.step_exponent)


def load_experiment_config(path: Optional[Union[str, Path]]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        data = ujson.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioParseError(f"cannot read config {path}: {e}") from e
    except ValueError as e:
        raise ScenarioParseError(f"config {path} is not valid JSON: {e}") from e
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioParseError(f"config {path}: {e}") from e


@dataclass(frozen=True)
class ExperimentPlan:
    scenario_path: Path
    algorithm: str
    trials: int = field(default_factory=lambda: settings.DEFAULT_TRIALS)
    seed: Optional[int] = None
    replications: int = 1
    output_dir: Path = field(default_factory=lambda: settings.OUTPUT_DIR)
    config: ExperimentConfig = field(default_factory=ExperimentConfig)

    def __post_init__(self):
        if self.algorithm not in Algorithms.ALL:
            raise ArgumentError(f"Unknown algorithm '{self.algorithm}'. Choose one of: {', '.join(Algorithms.ALL)}")
        validate_positive_int(self.trials, "trials")
        validate_positive_int(self.replications, "replications")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise ArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "scenario_path", Path(self.scenario_path))
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    def seed_for(self, scenario: Scenario) -> int:
        """--seed, else the scenario's base_seed, else BASE_SEED"""
        if self.seed is not None:
            return self.seed
        if scenario.base_seed is not None:
            return scenario.base_seed
        return settings.BASE_SEED

    @property
    def is_learner(self) -> bool:
        return self.algorithm not in (Algorithms.DP, Algorithms.GREEDY)
