"""
Bidshare configuration settings - environment driven
"""
import os
from pathlib import Path
import logging

logger = logging.getLogger(__name__)

VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings:
    def __init__(self):
        # Logging configuration
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
        self.DEBUG = os.getenv("DEBUG", "false").lower() == "true"
        self.LOG_TO_FILE = os.getenv("LOG_TO_FILE", "true").lower() == "true"

        # Paths
        self.PROJECT_ROOT = Path(__file__).parent.parent.parent
        self.LOGS_DIR = self.PROJECT_ROOT / "logs"
        self.DATA_DIR = self.PROJECT_ROOT / "data"
        self.SCENARIOS_DIR = self.DATA_DIR / "scenarios"
        self.OUTPUT_DIR = Path(os.getenv("OUTPUT_DIR", str(self.PROJECT_ROOT / "output")))

        # Evaluation campaign defaults
        self.DEFAULT_TRIALS = int(os.getenv("DEFAULT_TRIALS", "1000"))
        self.BASE_SEED = int(os.getenv("BASE_SEED", "0"))
        self.MC_WORKERS = int(os.getenv("MC_WORKERS", "1"))
        self.RECORD_WALLCLOCK = os.getenv("RECORD_WALLCLOCK", "false").lower() == "true"

        # Exact dynamic programming
        self.DP_TOLERANCE = float(os.getenv("DP_TOLERANCE", "1e-10"))
        self.EPS_FEAS = float(os.getenv("EPS_FEAS", "1e-9"))

        # Enumeration bounds
        self.DECISION_LIMIT = int(os.getenv("DECISION_LIMIT", "100000"))
        self.BRUTE_FORCE_LIMIT = int(os.getenv("BRUTE_FORCE_LIMIT", "1000000"))
        self.EXPORT_STATE_LIMIT = int(os.getenv("EXPORT_STATE_LIMIT", "50000"))
        self.SYNC_PAIR_LIMIT = int(os.getenv("SYNC_PAIR_LIMIT", "100000"))

        self.validate()

    def validate(self):
        """Validate configuration values"""
        if self.LOG_LEVEL not in VALID_LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {', '.join(VALID_LOG_LEVELS)}, got {self.LOG_LEVEL}")

        if self.DEFAULT_TRIALS < 1:
            raise ValueError("DEFAULT_TRIALS must be at least 1")

        if not 0 <= self.BASE_SEED < 2 ** 64:
            raise ValueError("BASE_SEED must be a 64-bit unsigned integer")

        if self.MC_WORKERS < 1:
            raise ValueError("MC_WORKERS must be at least 1")

        if self.DP_TOLERANCE <= 0:
            raise ValueError("DP_TOLERANCE must be positive")

        if self.EPS_FEAS < 0:
            raise ValueError("EPS_FEAS must be nonnegative")

        for name in ("DECISION_LIMIT", "BRUTE_FORCE_LIMIT", "EXPORT_STATE_LIMIT", "SYNC_PAIR_LIMIT"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

        if self.DP_TOLERANCE > 1e-6:
            logger.warning(f"DP_TOLERANCE={self.DP_TOLERANCE} is loose, oracle comparisons may drift")

        if self.EPS_FEAS > 1e-3:
            logger.warning(f"EPS_FEAS={self.EPS_FEAS} admits visibly infeasible actions into U_FS")

        if self.DEFAULT_TRIALS < 100:
            logger.warning("DEFAULT_TRIALS below 100, standard errors will be wide")

        logger.debug(f"Settings loaded: {self!r}")

    def __repr__(self):
        """String representation of settings"""
        return (f"Settings(log_level={self.LOG_LEVEL}, "
                f"trials={self.DEFAULT_TRIALS}, "
                f"seed={self.BASE_SEED}, "
                f"dp_tol={self.DP_TOLERANCE}, "
                f"workers={self.MC_WORKERS})")


# Global settings instance
settings = Settings()
