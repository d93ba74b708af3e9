"""
Shared fixtures: src/ on sys.path, quiet settings, toy models and seeded streams
"""

import os
import sys
from pathlib import Path

import pytest
import ujson

PROJECT_ROOT = Path(__file__).parent.parent
SRC_DIR = PROJECT_ROOT / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

os.environ.setdefault("LOG_TO_FILE", "false")
os.environ.setdefault("RECORD_WALLCLOCK", "false")
os.environ.setdefault("MC_WORKERS", "1")

from cmdp.generators import chain_model, toy_model  # noqa: E402
from cmdp.rng import RngStream  # noqa: E402
from rideshare.scenario import load_scenario  # noqa: E402

SCENARIOS_DIR = PROJECT_ROOT / "data" / "scenarios"
GOLDEN_DIR = Path(__file__).parent / "data"


@pytest.fixture
def golden():
    """Loader for the frozen fixed-seed outputs under tests/data"""
    def load(name):
        return ujson.loads((GOLDEN_DIR / f"{name}.json").read_text(encoding="utf-8"))
    return load


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture
def toy():
    return toy_model()


@pytest.fixture
def infeasible_toy():
    return toy_model(d_a=0.5, d_b=1.0)


@pytest.fixture
def chain():
    return chain_model([1.0, -2.0, 0.5], [3.0, 0.0, 1.0])


@pytest.fixture
def scenarios_dir():
    return SCENARIOS_DIR


@pytest.fixture
def micro_path():
    return SCENARIOS_DIR / "micro.json"


@pytest.fixture
def micro():
    return load_scenario(SCENARIOS_DIR / "micro.json")


@pytest.fixture
def two_point():
    return load_scenario(SCENARIOS_DIR / "two_point.json")


@pytest.fixture
def zero_demand():
    return load_scenario(SCENARIOS_DIR / "zero_demand.json")


@pytest.fixture
def desk():
    return load_scenario(SCENARIOS_DIR / "desk.json")
