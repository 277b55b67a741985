"""Configuration-driven experiment runner behind the `lab` command."""
from .config import ExperimentConfig, load_config

__all__ = ["ExperimentConfig", "load_config"]
