"""Deterministic discrete-event simulator for micro-batch stream processing."""

from .config import ConfigError, SimConfig, load_config, parse_config
from .simulation import SimulationResult, run_simulation

__all__ = ["ConfigError", "SimConfig", "SimulationResult", "load_config", "parse_config",
           "run_simulation"]
__version__ = "0.1.0"
