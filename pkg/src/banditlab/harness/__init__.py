"""Experiment configuration, registry, runner and command line."""

from .config import ExperimentConfig, load_config, parse_config, serialize_config
from .experiments import (best_arm_id_experiment, coin_decision_experiment, lb_instance, run_experiment)

__all__ = ["ExperimentConfig", "load_config", "parse_config", "serialize_config", "best_arm_id_experiment",
           "coin_decision_experiment", "lb_instance", "run_experiment"]
