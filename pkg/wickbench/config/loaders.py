# wickbench/config/loaders.py
"""
Configuration loading and argument parsing for wickbench.

This module implements the layered configuration system that loads settings from
multiple sources in priority order: CLI arguments → environment variables → config
file → defaults.

Key Functions:
- JSON config file parsing with position-bearing diagnostics
- Environment variable parsing with type conversion (.env files honored)
- Command-line argument parsing for `wickbench <kind> --config PATH ...`
- Dense-matrix budget from WICKBENCH_MAX_DIM
"""

import argparse
import json
import logging
import math
import os
from dataclasses import fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Type, TypeVar

from dotenv import load_dotenv

from .schema import (
    LOG_LEVELS,
    RUN_KINDS,
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

# Boolean value mappings for environment variable parsing
TRUTHY_VALUES = ("1", "true", "True", "yes", "Yes")
FALSY_VALUES = ("0", "false", "False", "no", "No")

T = TypeVar("T")


class EnvironmentKeys:
    """Environment variable names used by the application."""

    # Dense-matrix budget, given as a Fock dimension
    MAX_DIM = "WICKBENCH_MAX_DIM"

    # Run configuration
    LOG_LEVEL = "WICKBENCH_LOG_LEVEL"
    JOBS = "WICKBENCH_JOBS"
    JSON_LOGS = "WICKBENCH_JSON_LOGS"


def _build(cls: Type[T], data: Any, path: str) -> T:
    """Build a (possibly nested) config dataclass from a JSON object."""
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{path}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(f"{path}: unknown field(s) {', '.join(unknown)}")
    kwargs: Dict[str, Any] = {}
    nested = _NESTED.get(cls, {})
    for name, value in data.items():
        if name in nested:
            kwargs[name] = _build(nested[name], value, f"{path}.{name}" if path else name)
        else:
            kwargs[name] = value
    return cls(**kwargs)


_NESTED: Dict[type, Dict[str, type]] = {
    ModelConfig: {"geometry": GeometryConfig},
    DriveConfig: {"perturbation": ObservableConfig},
}
_SECTIONS: Dict[str, type] = {
    "model": ModelConfig,
    "state": StateConfig,
    "drive": DriveConfig,
    "observable": ObservableConfig,
    "controls": ControlsConfig,
    "sweep": SweepConfig,
    "run": RunConfig,
}


def config_from_dict(data: Any) -> ExperimentConfig:
    """Validated ExperimentConfig from a parsed JSON document."""
    if not isinstance(data, Mapping):
        raise ConfigurationError("config: top level must be a JSON object")
    known = set(_SECTIONS) | {"schema"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"config: unknown section(s) {', '.join(unknown)}")
    if "schema" not in data:
        raise ConfigurationError('schema: missing "schema" version field')
    sections = {name: _build(cls, data[name], name) for name, cls in _SECTIONS.items() if name in data}
    return ExperimentConfig(schema=data["schema"], **sections)


def load_from_file(path: Path) -> ExperimentConfig:
    """Parse and validate a JSON config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"config: cannot read {path}: {e.strerror or e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(
            f"config: malformed JSON in {path} at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from e
    logger.debug(f"Configuration file {path} parsed")
    return config_from_dict(data)


def _parse_positive_int(name: str, raw: str) -> int:
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{name}: expected a positive integer, got {raw!r}") from e
    if value < 1:
        raise ConfigurationError(f"{name}: expected a positive integer, got {raw!r}")
    return value


def load_from_env(config: ExperimentConfig) -> ExperimentConfig:
    """Load configuration from environment variables."""

    # Log level
    if log_level_env := os.environ.get(EnvironmentKeys.LOG_LEVEL):
        log_level_upper = log_level_env.upper()
        if log_level_upper in LOG_LEVELS:
            config.run.log_level = log_level_upper

    # JSON logs
    if os.environ.get(EnvironmentKeys.JSON_LOGS) in TRUTHY_VALUES:
        config.run.json_logs = True
    elif os.environ.get(EnvironmentKeys.JSON_LOGS) in FALSY_VALUES:
        config.run.json_logs = False

    # Worker count
    if jobs := os.environ.get(EnvironmentKeys.JOBS):
        config.run.jobs = _parse_positive_int(EnvironmentKeys.JOBS, jobs)

    # Mode budget
    if os.environ.get(EnvironmentKeys.MAX_DIM) and config.controls.max_modes is None:
        config.controls.max_modes = max_modes_budget(None)

    return config


def max_modes_budget(default: Optional[int]) -> Optional[int]:
    """
    Mode budget implied by WICKBENCH_MAX_DIM.

    The variable is a Fock dimension; the budget is floor(log2(dim)) modes.
    """
    raw = os.environ.get(EnvironmentKeys.MAX_DIM)
    if not raw:
        return default
    dimension = _parse_positive_int(EnvironmentKeys.MAX_DIM, raw)
    if dimension < 2:
        raise ConfigurationError(f"{EnvironmentKeys.MAX_DIM}: must be at least 2, got {dimension}")
    return int(math.floor(math.log2(dimension)))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wickbench",
        description="Numerical checks of adiabatic response and Wick rotation on lattice fermions",
    )
    parser.add_argument("kind", choices=RUN_KINDS, help="Run kind to execute")
    parser.add_argument(
        "--config",
        type=Path,
        required=True,
        help="Path to the JSON experiment configuration",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="Worker processes for sweeps (default: logical cores)",
    )
    parser.add_argument(
        "--out",
        type=str,
        default=None,
        help="Output directory for results.csv and manifest.json",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seed for every random draw in the run",
    )
    parser.add_argument(
        "--log-level",
        choices=list(LOG_LEVELS),
        default=None,
        help="Set logging level (default: WARNING)",
    )
    parser.add_argument(
        "--json-logs",
        action="store_true",
        help="Emit logs as JSON lines",
    )
    return parser


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def load_from_args(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    """Load configuration from parsed command line arguments."""
    config.run.kind = args.kind

    if args.jobs is not None:
        config.run.jobs = _parse_positive_int("--jobs", str(args.jobs))

    if args.out is not None:
        config.run.output_dir = args.out

    if args.seed is not None:
        config.run.seed = args.seed

    if args.log_level:
        config.run.log_level = args.log_level

    if args.json_logs:
        config.run.json_logs = True

    return config


def load_config(argv: Optional[List[str]] = None) -> ExperimentConfig:
    """
    Load configuration with clear precedence order.

    Configuration is loaded in the following priority order:
    1. Command line arguments (highest priority)
    2. Environment variables (.env files included)
    3. The JSON config file named by --config
    4. Defaults (lowest priority)

    Raises:
        ConfigurationError: if any layer is malformed or the result fails validation
    """
    args = parse_arguments(argv)
    load_dotenv()

    config = load_from_file(args.config)
    logger.debug("Configuration file layer applied")

    config = load_from_env(config)
    logger.debug("Environment layer applied")

    config = load_from_args(config, args)
    logger.debug("Argument layer applied")

    config.validate()
    return config

