"""
Evaluation checkpoints recorded during training
"""

import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Union

import pandas as pd

from cmdp.rng import RngStream
from cmdp.simulate import mc_evaluate
from config.settings import settings
from utils.constants import Streams

logger = logging.getLogger(__name__)

COLUMNS = ["update_count", "episode", "xi_norm_q_error", "xi_norm_h_error",
           "mc_mean_reward", "mc_mean_constraint", "wallclock_seconds"]
LAMBDA_COLUMN = "lambda"


@dataclass(frozen=True)
class Checkpoint:
    update_count: int
    episode: int
    xi_norm_q_error: Optional[float] = None
    xi_norm_h_error: Optional[float] = None
    mc_mean_reward: Optional[float] = None
    mc_mean_constraint: Optional[float] = None
    wallclock_seconds: Optional[float] = None
    multiplier: Optional[float] = None


class LearningLog:
    def __init__(self, with_multiplier: bool = False):
        self.with_multiplier = with_multiplier
        self.checkpoints: List[Checkpoint] = []
        self.episode_lengths: List[int] = []

    def append(self, checkpoint: Checkpoint) -> None:
        self.checkpoints.append(checkpoint)
        logger.debug(f"Checkpoint {checkpoint}")

    @property
    def last(self) -> Optional[Checkpoint]:
        return self.checkpoints[-1] if self.checkpoints else None

    def __len__(self):
        return len(self.checkpoints)

    def __iter__(self) -> Iterator[Checkpoint]:
        return iter(self.checkpoints)

    def to_frame(self) -> pd.DataFrame:
        columns = COLUMNS + ([LAMBDA_COLUMN] if self.with_multiplier else [])
        rows = []
        for checkpoint in self.checkpoints:
            row = asdict(checkpoint)
            row[LAMBDA_COLUMN] = row.pop("multiplier")
            rows.append({name: row[name] for name in columns})
        frame = pd.DataFrame(rows, columns=columns)
        return frame.astype({"update_count": "int64", "episode": "int64"}) if rows else frame

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, na_rep="")
        return path


class CheckpointRecorder:
    """Scores a learner at checkpoints against an optional oracle and a fixed evaluation stream.

    The evaluation stream is rebuilt from the seed once and reused, so every
    checkpoint and every learner trained from the same seed is scored on the
    same trial streams.
    """

    def __init__(self, model, config, rng, reference=None, log: Optional[LearningLog] = None):
        self.model = model
        self.config = config
        self.reference = reference
        self.log = log if log is not None else LearningLog()
        seed = config.eval_seed if config.eval_seed is not None else rng.seed
        self.eval_rng = RngStream(seed, Streams.EVALUATION)
        self.started = time.perf_counter()

    def due(self, episode: int) -> bool:
        return episode % self.config.eval_every == 0 or episode == self.config.max_episodes

    def record(self, policy, episode: int, updates: int, q_lookup=None, h_lookup=None,
               multiplier: Optional[float] = None) -> Checkpoint:
        q_error = h_error = None
        if self.reference is not None:
            if q_lookup is not None:
                q_error = self.reference.q_error(q_lookup)
            if h_lookup is not None:
                h_error = self.reference.h_error(h_lookup)

        reward = constraint = None
        if self.config.eval_trials > 0:
            result = mc_evaluate(self.model, policy, self.config.eval_trials, self.eval_rng)
            reward, constraint = result.mean_total_reward, result.mean_total_constraint

        wallclock = time.perf_counter() - self.started if settings.RECORD_WALLCLOCK else None
        checkpoint = Checkpoint(updates, episode, q_error, h_error, reward, constraint, wallclock, multiplier)
        self.log.append(checkpoint)
        if h_error is not None:
            logger.info(f"📊 episode {episode}: h error {h_error:.4g}"
                        + (f", q error {q_error:.4g}" if q_error is not None else ""))
        return checkpoint
