#!/usr/bin/env python3
"""
BIDSHARE - MAIN ENTRY POINT
Two-phase Q-learning for revenue maximization in constrained vehicle sharing
"""

import logging
import sys
import traceback
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import List, Optional

# ===== PATH CONFIGURATION =====
PROJECT_ROOT = Path(__file__).parent
SRC_DIR = PROJECT_ROOT / "src"

for path in [str(PROJECT_ROOT), str(SRC_DIR)]:
    if path not in sys.path:
        sys.path.insert(0, path)

# Settings read the environment at import time, so .env goes first
from dotenv import load_dotenv  # noqa: E402

if (PROJECT_ROOT / ".env").exists():
    load_dotenv(PROJECT_ROOT / ".env")

import colorlog  # noqa: E402

from config.settings import settings  # noqa: E402
from utils.constants import ExitCodes  # noqa: E402
from utils.errors import (BidshareError, EnumerationTooLargeError, InfeasibleProblemError,  # noqa: E402
                          MismatchedScenarioError, NonFiniteSupportError, NotEnumerableError,
                          PreconditionError, ScenarioParseError)
from utils.validators import ValidationError  # noqa: E402

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


# ===== LOGGING SETUP =====
def setup_logging() -> bool:
    """Colorized console logging plus a rotating file under logs/"""
    level = logging.DEBUG if settings.DEBUG else getattr(logging, settings.LOG_LEVEL)

    console = colorlog.StreamHandler(sys.stderr)
    console.setFormatter(colorlog.ColoredFormatter(
        '%(log_color)s' + LOG_FORMAT,
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'bold_red',
        },
    ))
    handlers = [console]

    file_ok = True
    if settings.LOG_TO_FILE:
        try:
            settings.LOGS_DIR.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                settings.LOGS_DIR / "bidshare.log",
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=5,
            )
            file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
            handlers.append(file_handler)
        except OSError as e:
            print(f"⚠️  Could not setup file logging: {e}", file=sys.stderr)
            file_ok = False

    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=handlers, force=True)

    # Reduce noise from external libraries
    logging.getLogger('numexpr').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(f"📁 Log files: {settings.LOGS_DIR}")
    logger.debug(f"📊 Log level: {logging.getLevelName(level)}")
    return file_ok


# ===== ERROR HANDLING =====
def handle_error(error: BaseException, command: Optional[str]) -> int:
    """Log a diagnostic for an escaped exception and pick the exit code"""
    logger = logging.getLogger(__name__)

    if isinstance(error, InfeasibleProblemError):
        logger.error(f"❌ Infeasible: {error}")
    elif isinstance(error, ScenarioParseError):
        logger.error(f"❌ Parse error: {error}")
    elif isinstance(error, (EnumerationTooLargeError, NotEnumerableError, NonFiniteSupportError)):
        logger.error(f"❌ Resource bound exceeded: {error}")
    elif isinstance(error, (ValidationError, PreconditionError, MismatchedScenarioError)):
        logger.error(f"❌ Invalid arguments for '{command}': {error}")
    elif isinstance(error, BidshareError):
        logger.error(f"❌ {type(error).__name__}: {error}")
    else:
        error_id = datetime.now().strftime("%Y%m%d_%H%M%S")
        logger.error(f"Unhandled error (ID: {error_id}) in command {command}: {error}")
        logger.error(f"Error details: {''.join(traceback.format_exception(type(error), error, error.__traceback__))}")
        return ExitCodes.FAILURE

    return getattr(error, "exit_code", ExitCodes.FAILURE)


def create_required_directories():
    for directory in [settings.OUTPUT_DIR]:
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            print(f"⚠️  Could not create directory {directory}: {e}", file=sys.stderr)


# ===== MAIN APPLICATION =====
def main(argv: Optional[List[str]] = None) -> int:
    from commands import build_registry

    setup_logging()
    logger = logging.getLogger(__name__)
    registry = build_registry()

    try:
        args = registry.parse(argv)
    except ValidationError as e:
        registry.parser.print_usage(sys.stderr)
        return handle_error(e, None)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    if not getattr(args, "handler", None):
        registry.parser.print_help()
        return ExitCodes.FAILURE

    start_time = datetime.now()
    logger.debug(f"🚀 bidshare {args.command} started")
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        logger.info("⌨️  Keyboard interrupt received")
        return ExitCodes.FAILURE
    except Exception as e:
        return handle_error(e, args.command)
    finally:
        logger.debug(f"⏱️  Total runtime: {datetime.now() - start_time}")


# ===== ENTRY POINT =====
if __name__ == "__main__":
    create_required_directories()
    sys.exit(main())
