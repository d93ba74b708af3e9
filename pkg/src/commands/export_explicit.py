"""
export-explicit: write the exact ExplicitCmdp of a finite-support scenario
"""

import argparse
import logging
from pathlib import Path

from bench.runner import export_scenario
from utils.constants import Emojis, ExitCodes

logger = logging.getLogger(__name__)


def handle(args: argparse.Namespace) -> int:
    out = args.out if args.out.suffix else args.out / f"{args.scenario.stem}.cmdp"
    path = export_scenario(args.scenario, out)
    print(f"{Emojis.FILE} {path}")
    return ExitCodes.SUCCESS


def setup(registry) -> None:
    parser = registry.add("export-explicit", handle, "export a micro scenario as an explicit CMDP file")
    parser.add_argument("--scenario", type=Path, required=True, help="scenario JSON file")
    parser.add_argument("--out", type=Path, required=True,
                        help="target file, or a directory to write <scenario>.cmdp into")
