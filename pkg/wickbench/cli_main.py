# wickbench/cli_main.py
"""
wickbench - Main CLI application entry point.

Implements a three-phase run:
1. Configuration Phase - layered config (file → environment → arguments) and validation
2. Logging Phase - root logger configured from the validated run settings
3. Run Phase - model assembly, the registered run kind, results.csv and manifest.json

Exit codes: 0 all verdicts passed, 1 an identity check failed, 2 configuration or
model error, 3 a numerical or resource budget was exhausted (including any failed
sweep row).
"""

import json
import logging
import sys
import tomllib
from pathlib import Path
from typing import List, Optional

from wickbench.config import get_config
from wickbench.config.schema import ConfigurationError
from wickbench.error_handler import EXIT_CHECK_FAILED, EXIT_CONFIG, handle_run_error
from wickbench.logging_config import configure_logging
from wickbench.runner import execute

logger = logging.getLogger(__name__)

PYPROJECT_PATH = Path(__file__).resolve().parents[1] / "pyproject.toml"


def get_version(pyproject: Path = PYPROJECT_PATH) -> str:
    """Project version from pyproject.toml, or "unknown" when it cannot be read."""
    try:
        with pyproject.open("rb") as handle:
            return str(tomllib.load(handle)["project"]["version"])
    except (OSError, KeyError, tomllib.TOMLDecodeError):
        return "unknown"


def report_error(response: dict) -> None:
    """Write a structured error response to stderr as one JSON line."""
    print(json.dumps(response, sort_keys=True), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> None:
    """Main application entry point with clear phase separation."""

    # Phase 1: Configuration
    try:
        config = get_config(argv)
    except ConfigurationError as e:
        report_error(handle_run_error(e, "configuration"))
        sys.exit(EXIT_CONFIG)

    # Phase 2: Logging (before any logger usage)
    configure_logging(log_level=config.run.log_level, json_format=config.run.json_logs)
    logger.info(f"wickbench v{get_version()}")
    logger.debug(f"Run configuration: {config}")

    # Phase 3: Run
    try:
        code = execute(config)
    except KeyboardInterrupt:
        print("\nRun cancelled by user", file=sys.stderr)
        sys.exit(EXIT_CHECK_FAILED)
    except Exception as e:
        response = handle_run_error(e, config.run.kind or "run")
        logger.error(f"Run {config.run.kind} failed: {response['message']}")
        report_error(response)
        sys.exit(response["exit_code"])

    sys.exit(code)


if __name__ == "__main__":
    main()
