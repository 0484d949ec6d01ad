"""Configuration, run orchestration and the command-line interface."""
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .rates import RateFit, fit_rate
from .runs import (InvariantBreach, run_besov_checks, run_member, run_reconnection, run_simulation,
                   run_sweep)

__all__ = [
    "ConfigError", "ExperimentConfig", "InvariantBreach", "RateFit", "config_from_dict", "fit_rate",
    "load_config", "run_besov_checks", "run_member", "run_reconnection", "run_simulation", "run_sweep",
]
