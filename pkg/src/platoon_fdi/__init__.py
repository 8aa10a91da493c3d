"""Leader/follower platoon simulation with stealthy false-data-injection attacks."""

from .config import ConfigError, ScenarioConfig, parse_config, serialize_config, load_config
from .engine import SimResult, SimulationError, prepare, run_scenario, step
from .presets import get_preset, paper_presets, variant_presets

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "SimResult",
    "SimulationError",
    "get_preset",
    "load_config",
    "paper_presets",
    "parse_config",
    "prepare",
    "run_scenario",
    "serialize_config",
    "step",
    "variant_presets",
]
