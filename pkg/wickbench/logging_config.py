# wickbench/logging_config.py
"""
Logging configuration for wickbench with format options.

JSON lines suit batch sweeps whose logs are collected next to the run manifest; the
compact format is for interactive use. Pool workers call configure_logging as their
initializer, so both formats tag records from worker processes.
"""

import json
import logging
from typing import Any, Dict

PACKAGE_PREFIX = "wickbench."
MAIN_PROCESS = "MainProcess"

# extras a record may carry via logger.x(..., extra={...})
EXTRA_FIELDS = ("error_type", "error_details", "config_hash")


def short_name(name: str) -> str:
    return name[len(PACKAGE_PREFIX) :] if name.startswith(PACKAGE_PREFIX) else name


class JSONFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON.

        Args:
            record: The log record to format

        Returns:
            JSON-formatted log string
        """
        entry: Dict[str, Any] = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        if record.processName != MAIN_PROCESS:
            entry["worker"] = record.processName
        for key in EXTRA_FIELDS:
            if hasattr(record, key):
                entry[key] = getattr(record, key)
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        return json.dumps(entry, default=str)


class CompactFormatter(logging.Formatter):
    """HH:MM:SS clock, logger name without the package prefix, worker tag in pools."""

    def format(self, record: logging.LogRecord) -> str:
        source = short_name(record.name)
        if record.processName != MAIN_PROCESS:
            source = f"{record.processName}:{source}"
        clock = self.formatTime(record, datefmt="%H:%M:%S")
        line = f"{clock} - {source} - {record.levelname} - {record.getMessage()}"
        if record.exc_info:
            line = f"{line}\n{self.formatException(record.exc_info)}"
        return line


def configure_logging(log_level: str = "WARNING", json_format: bool = False) -> None:
    """Configure the root logger for wickbench.

    Existing root handlers are replaced, so calling this again (or in a pool
    worker) never duplicates output.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        json_format: Whether to use JSON formatting for logs
    """
    root = logging.getLogger()
    root.setLevel(getattr(logging, log_level.upper(), logging.WARNING))
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(JSONFormatter() if json_format else CompactFormatter())
    root.addHandler(handler)

    # Reduce third-party noise
    for noisy in ("scipy", "multiprocessing"):
        logging.getLogger(noisy).setLevel(logging.ERROR)
