"""Experiment harness: problem generators, seeded runs, CSV output and the CLI."""
from .config import AlgorithmSpec, EnvironmentSpec, ExperimentConfig, FeatureSpec, config_from_dict, load_config
from .environments import generate_environment, generate_features, gridworld, random_mdp, random_walk
from .experiment import CSV_HEADER, ExperimentResult, build_experiment_problem, error_metrics, log_grid, run_experiment
