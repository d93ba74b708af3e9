"""
Subcommand discovery and registration.

Every non-private module in this package exposes ``setup(registry)`` and
registers one subcommand on the shared argparse parser.
"""

import argparse
import importlib
import logging
import pkgutil
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set

from bench.plan import ExperimentPlan, load_experiment_config
from config.settings import settings
from utils.constants import Algorithms
from utils.validators import ValidationError

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as ValidationError instead of exiting with status 2"""

    def error(self, message):
        raise ValidationError(message)


class CommandRegistry:
    """Owns the top-level parser and the handler of every subcommand"""

    def __init__(self, prog: str = "bidshare"):
        self.parser = _Parser(
            prog=prog,
            description="Two-phase Q-learning for constrained vehicle sharing",
        )
        self.parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
        self._subparsers = self.parser.add_subparsers(dest="command", metavar="<command>")
        self.handlers: Dict[str, Handler] = {}

    def add(self, name: str, handler: Handler, help: str) -> argparse.ArgumentParser:
        if name in self.handlers:
            raise ValueError(f"command '{name}' registered twice")
        sub = self._subparsers.add_parser(name, help=help, description=help)
        sub.set_defaults(handler=handler)
        self.handlers[name] = handler
        return sub

    def parse(self, argv: Optional[List[str]] = None) -> argparse.Namespace:
        return self.parser.parse_args(argv)


class CommandLoader:
    """Imports the command modules and lets each one register itself"""

    def __init__(self, registry: CommandRegistry, commands_to_load: str = "all"):
        self.registry = registry
        self.commands_to_load_arg = commands_to_load
        self.loaded_commands: Set[str] = set()

    def get_command_list(self) -> List[str]:
        """Commands to load; accepts 'all' or 'solve,train,!compare' style filters"""
        all_commands = self._discover_commands()
        if self.commands_to_load_arg == "all":
            return all_commands

        include, exclude = [], []
        for name in self.commands_to_load_arg.split(","):
            name = name.strip()
            if name.startswith("!"):
                exclude.append(name[1:])
            elif name:
                include.append(name)

        result = [c for c in all_commands if c in include] if include else list(all_commands)
        return [c for c in result if c not in exclude]

    def _discover_commands(self) -> List[str]:
        package_dir = Path(__file__).parent
        return sorted(info.name for info in pkgutil.iter_modules([str(package_dir)])
                      if not info.name.startswith("_"))

    def load_command(self, name: str) -> bool:
        try:
            module = importlib.import_module(f"{__name__}.{name}")
            module.setup(self.registry)
            self.loaded_commands.add(name)
            logger.debug(f"Loaded command: {name}")
            return True
        except (ImportError, AttributeError) as e:
            logger.error(f"Failed to load command {name}: {e}")
            return False

    def load_all_commands(self) -> None:
        loaded_count = 0
        failed_count = 0
        for name in self.get_command_list():
            if self.load_command(name):
                loaded_count += 1
            else:
                failed_count += 1
        logger.debug(f"Command loading complete: {loaded_count} loaded, {failed_count} failed")


def build_registry(commands_to_load: str = "all") -> CommandRegistry:
    registry = CommandRegistry()
    CommandLoader(registry, commands_to_load).load_all_commands()
    return registry


# ===== SHARED ARGUMENTS =====

def add_campaign_arguments(parser: argparse.ArgumentParser, scenario_required: bool = True) -> None:
    """--scenario, --trials, --seed, --replications, --out and --config"""
    parser.add_argument("--scenario", type=Path, required=scenario_required,
                        help="scenario JSON file")
    parser.add_argument("--trials", type=int, default=settings.DEFAULT_TRIALS,
                        help=f"Monte Carlo evaluation trials (default {settings.DEFAULT_TRIALS})")
    parser.add_argument("--seed", type=int, default=None,
                        help="base seed (u64); defaults to the scenario's base_seed, then BASE_SEED")
    parser.add_argument("--replications", type=int, default=1,
                        help="independent training runs, pooled in the comparison row")
    parser.add_argument("--out", type=Path, default=settings.OUTPUT_DIR, help="output directory")
    parser.add_argument("--config", type=Path, default=None, help="experiment config JSON")


def add_algorithm_argument(parser: argparse.ArgumentParser, choices=Algorithms.ALL,
                           repeatable: bool = False) -> None:
    if repeatable:
        parser.add_argument("--algo", action="append", required=True, choices=choices,
                            help="algorithm token; repeat once per algorithm")
    else:
        parser.add_argument("--algo", required=True, choices=choices, help="algorithm token")


def plan_from_args(args: argparse.Namespace, algorithm: str) -> ExperimentPlan:
    return ExperimentPlan(
        scenario_path=args.scenario,
        algorithm=algorithm,
        trials=args.trials,
        seed=args.seed,
        replications=args.replications,
        output_dir=args.out,
        config=load_experiment_config(args.config),
    )
