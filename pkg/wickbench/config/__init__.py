# wickbench/config/__init__.py
"""
Configuration system initialization and management for wickbench.

Implements the singleton pattern for the experiment configuration: the CLI loads it
once from the layered sources and every run reads it through get_config().
"""

import logging
from typing import List, Optional

from .loaders import load_config, load_from_file, max_modes_budget
from .schema import (
    ConfigurationError,
    ControlsConfig,
    DriveConfig,
    ExperimentConfig,
    GeometryConfig,
    ModelConfig,
    ObservableConfig,
    RunConfig,
    StateConfig,
    SweepConfig,
)

logger = logging.getLogger(__name__)

# Singleton pattern for configuration
_config: Optional[ExperimentConfig] = None


def get_config(argv: Optional[List[str]] = None) -> ExperimentConfig:
    """Get the experiment configuration, initializing it from argv if needed."""
    global _config
    if _config is None:
        _config = load_config(argv)
        logger.debug("Configuration loaded")
    return _config


def reset_config() -> None:
    """Reset the configuration to force reloading."""
    global _config
    _config = None
    logger.debug("Configuration reset")


__all__ = [
    "ConfigurationError",
    "ControlsConfig",
    "DriveConfig",
    "ExperimentConfig",
    "GeometryConfig",
    "ModelConfig",
    "ObservableConfig",
    "RunConfig",
    "StateConfig",
    "SweepConfig",
    "get_config",
    "load_from_file",
    "max_modes_budget",
    "reset_config",
]
