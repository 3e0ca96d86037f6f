"""Synthetic benchmark: data, models, single runs and experiment suites."""
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .dataset import SyntheticDataset, generate_dataset
from .models import MLP, MoNetRegressor, build_model, default_monet_config
from .suites import run_suite, suite_arms
from .train import TrainReport, epochs_to_reach, train

__all__ = [
    "ConfigError", "ExperimentConfig", "MLP", "MoNetRegressor", "SyntheticDataset", "TrainReport",
    "build_model", "config_from_dict", "default_monet_config", "epochs_to_reach", "generate_dataset",
    "load_config", "run_suite", "suite_arms", "train",
]
