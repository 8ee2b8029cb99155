"""
Tests for the structured error responses and their exit codes.
"""

import pytest

from wickbench.config import ConfigurationError
from wickbench.error_handler import (
    EXIT_BUDGET,
    EXIT_CHECK_FAILED,
    EXIT_CONFIG,
    EXIT_OK,
    convert_exception_to_response,
    exit_code_for,
    handle_run_error,
)
from wickbench.exceptions import (
    BudgetUnattainable,
    DegenerateFit,
    EigenFailure,
    JobBudgetExceeded,
    KernelNotHermitian,
    ModeCountExceeded,
    QuadratureBudgetExceeded,
    UnitarityLost,
)


class TestErrorResponses:
    """Test exception classification."""

    @pytest.mark.parametrize(
        ("exception", "error", "code"),
        [
            (ConfigurationError("state.beta: must be positive"), "configuration_error", EXIT_CONFIG),
            (KernelNotHermitian("h(0;1) != conj(h(1;0))"), "model_error", EXIT_CONFIG),
            (ValueError("order must be between 1 and 3"), "invalid_argument", EXIT_CONFIG),
            (ModeCountExceeded("16 modes"), "mode_budget_exceeded", EXIT_BUDGET),
            (QuadratureBudgetExceeded("nodes"), "quadrature_budget_exceeded", EXIT_BUDGET),
            (BudgetUnattainable("tolerance"), "budget_unattainable", EXIT_BUDGET),
            (UnitarityLost("defect"), "numerical_budget_exceeded", EXIT_BUDGET),
            (JobBudgetExceeded("grid"), "budget_exceeded", EXIT_BUDGET),
            (DegenerateFit("one point"), "identity_check_failed", EXIT_CHECK_FAILED),
            (EigenFailure("eigh"), "wickbench_error", EXIT_CHECK_FAILED),
        ],
    )
    def test_classification(self, exception, error, code):
        """Each exception family maps to its error name and exit code."""
        response = convert_exception_to_response(exception)
        assert response["error"] == error
        assert response["exit_code"] == code
        assert response["message"] == str(exception)

    def test_unknown_error(self):
        """Unexpected exceptions name the failing context."""
        response = handle_run_error(RuntimeError("boom"), "gibbs")
        assert response["error"] == "unknown_error"
        assert response["exit_code"] == EXIT_CHECK_FAILED
        assert "gibbs" in response["message"]

    def test_resolution_hints(self):
        """Configuration and budget errors suggest a fix."""
        assert "resolution" in convert_exception_to_response(ConfigurationError("x"))
        assert "WICKBENCH_MAX_DIM" in convert_exception_to_response(ModeCountExceeded("x"))["resolution"]


class TestVerdictExitCode:
    """Test exit codes of completed runs."""

    def test_all_pass(self):
        """Only passing verdicts exit 0."""
        assert exit_code_for(["pass", "pass"]) == EXIT_OK
        assert exit_code_for([]) == EXIT_OK

    def test_any_failure(self):
        """A single failed verdict exits 1."""
        assert exit_code_for(["pass", "fail"]) == EXIT_CHECK_FAILED
