import copy
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from streamsim.config import parse_config  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

TWO_STAGE = {
    "stages": [
        {"id": "S1", "constraints": [], "cost": {"base_ms": 3100, "jitter_ms": [0, 300]}},
        {"id": "S2", "constraints": ["S1"], "cost": {"base_ms": 100}},
    ],
    "empty_job": {"cost": {"base_ms": 100}},
}

DIAMOND = {
    "stages": [
        {"id": "S1", "constraints": [], "cost": {"base_ms": 10}},
        {"id": "S2", "constraints": ["S1"], "cost": {"base_ms": 20}},
        {"id": "S3", "constraints": ["S1"], "cost": {"base_ms": 30}},
        {"id": "S4", "constraints": ["S2", "S3"], "cost": {"base_ms": 40}},
    ],
    "empty_job": {"cost": {"base_ms": 100}},
}


def config_dict(**overrides):
    data = {
        "seed": 7,
        "horizon_ms": 10_000,
        "batch_interval_ms": 2000,
        "workers": {"count": 30, "cores": 2, "speed": 1, "memory_mb": 2048},
        "arrival": {"model": "exponential", "mean_ms": 1960, "item_size": 1024},
        "workflow": copy.deepcopy(TWO_STAGE),
    }
    for key, value in overrides.items():
        data[key] = value
    return data


def make_config(**overrides):
    return parse_config(config_dict(**overrides))


@pytest.fixture
def config_dir():
    return CONFIG_DIR


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key, (ok, detail) in sorted(module.REPORT.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}")
        terminalreporter.write_line(f"      {detail}")
