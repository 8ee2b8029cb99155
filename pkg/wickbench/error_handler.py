# wickbench/error_handler.py
"""
Centralized error handling for wickbench runs with structured responses.

Every failure of a run, or of a single sweep point, is converted to the same
{"error", "message", "resolution", "exit_code"} shape; the CLI exits with the code and
the manifest records the response.
"""

import logging
from typing import Any, Dict, Iterable

from wickbench.config.schema import ConfigurationError
from wickbench.exceptions import (
    BudgetError,
    BudgetUnattainable,
    CumulantOrderExceeded,
    IdentityCheckFailure,
    ModeCountExceeded,
    ModelError,
    OverflowRisk,
    QuadratureBudgetExceeded,
    UnitarityLost,
    WickbenchError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3


def handle_run_error(exception: Exception, context: str = "") -> Dict[str, Any]:
    """
    Handle errors from run functions and return structured responses.

    Args:
        exception: The exception that occurred
        context: Context about which run failed

    Returns:
        Structured error response dictionary
    """
    return convert_exception_to_response(exception, context)


def convert_exception_to_response(exception: Exception, context: str = "") -> Dict[str, Any]:
    """
    Convert an exception to a structured response carrying its exit code.

    Args:
        exception: The exception to convert
        context: Additional context about where the error occurred

    Returns:
        Structured error response dictionary
    """
    if isinstance(exception, ConfigurationError):
        return {
            "error": "configuration_error",
            "message": str(exception),
            "resolution": "Fix the named field in the config file or command line",
            "exit_code": EXIT_CONFIG,
        }

    elif isinstance(exception, ModeCountExceeded):
        return {
            "error": "mode_budget_exceeded",
            "message": str(exception),
            "resolution": "Use a smaller lattice or raise WICKBENCH_MAX_DIM",
            "exit_code": EXIT_BUDGET,
        }

    elif isinstance(exception, (QuadratureBudgetExceeded, CumulantOrderExceeded)):
        return {
            "error": "quadrature_budget_exceeded",
            "message": str(exception),
            "resolution": "Widen controls.panel_width, lower the order or raise controls.max_evaluations",
            "exit_code": EXIT_BUDGET,
        }

    elif isinstance(exception, BudgetUnattainable):
        return {
            "error": "budget_unattainable",
            "message": str(exception),
            "resolution": "Loosen controls.tolerance or refine the quadrature and time step",
            "exit_code": EXIT_BUDGET,
        }

    elif isinstance(exception, (UnitarityLost, OverflowRisk)):
        return {
            "error": "numerical_budget_exceeded",
            "message": str(exception),
            "resolution": "Reduce controls.ode_step or β·spread(K)",
            "exit_code": EXIT_BUDGET,
        }

    elif isinstance(exception, BudgetError):
        return {
            "error": "budget_exceeded",
            "message": str(exception),
            "resolution": "Reduce the grid or raise the named budget",
            "exit_code": EXIT_BUDGET,
        }

    elif isinstance(exception, ModelError):
        return {
            "error": "model_error",
            "message": str(exception),
            "resolution": "Check the model, observable and switch sections of the config",
            "exit_code": EXIT_CONFIG,
        }

    elif isinstance(exception, IdentityCheckFailure):
        return {
            "error": "identity_check_failed",
            "message": str(exception),
            "exit_code": EXIT_CHECK_FAILED,
        }

    elif isinstance(exception, ValueError):
        return {
            "error": "invalid_argument",
            "message": str(exception),
            "resolution": "Check the run order and numeric settings",
            "exit_code": EXIT_CONFIG,
        }

    elif isinstance(exception, WickbenchError):
        return {"error": "wickbench_error", "message": str(exception), "exit_code": EXIT_CHECK_FAILED}

    else:
        # Generic error handling with structured logging
        logger.error(
            f"Error in {context}: {exception}",
            extra={
                "error_type": type(exception).__name__,
                "error_details": {"context": context, "message": str(exception)},
            },
        )
        return {
            "error": "unknown_error",
            "message": f"Failed to execute {context}: {str(exception)}",
            "exit_code": EXIT_CHECK_FAILED,
        }


def exit_code_for(verdicts: Iterable[str]) -> int:
    """Exit code of a completed run: 1 if any verdict is not a pass."""
    return EXIT_OK if all(v == "pass" for v in verdicts) else EXIT_CHECK_FAILED
