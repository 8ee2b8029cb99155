# wickbench/exceptions.py
"""
Custom exceptions for wickbench with category-based exit codes.

Defines hierarchical exception types for the failure modes of a verification run:
invalid model input, exhausted numerical or resource budgets, and identity checks
that ran to completion but did not hold. The CLI maps each category to an exit
code through the error handler.
"""


class WickbenchError(Exception):
    """Base exception for wickbench."""

    pass


class ModelError(WickbenchError):
    """An operator, kernel or switch does not satisfy its construction contract."""

    pass


class BudgetError(WickbenchError):
    """A resource or certified-error budget was exhausted."""

    pass


class IdentityCheckFailure(WickbenchError):
    """A verification ran to completion but its identity did not hold."""

    pass


class ModeCountExceeded(BudgetError):
    """The Fock space would exceed the configured dense-matrix budget."""

    pass


class SiteOutOfRange(ModelError):
    """A site label lies outside the lattice."""

    pass


class KernelNotHermitian(ModelError):
    """A one-body kernel is not Hermitian."""

    pass


class RangeViolation(ModelError):
    """A kernel couples sites beyond its declared range or bound."""

    pass


class OperatorContractError(ModelError):
    """An operator lacks a required property (self-adjointness, gauge invariance)."""

    pass


class EigenFailure(WickbenchError):
    """Dense eigendecomposition failed or produced non-finite values."""

    pass


class OverflowRisk(BudgetError):
    """An imaginary-time exponent would exceed the exponent budget."""

    pass


class OddOperatorUnsupported(ModelError):
    """Time ordering was requested for an operator that is not even."""

    pass


class CumulantOrderExceeded(BudgetError):
    """More cumulant arguments than the configured partition-inversion cap."""

    pass


class SeriesDivergenceSuspected(IdentityCheckFailure):
    """Successive cumulant-series terms grew for three consecutive orders."""

    pass


class PositiveTimeUnsupported(ModelError):
    """A switch function was evaluated at positive time."""

    pass


class SwitchAssumptionViolated(ModelError):
    """Switch Laplace data has non-finite moments or non-positive frequencies."""

    pass


class UnitarityLost(BudgetError):
    """Propagator drifted from unitarity beyond tolerance after projection."""

    pass


class QuadratureBudgetExceeded(BudgetError):
    """A quadrature would need more integrand evaluations than allowed."""

    pass


class BudgetUnattainable(BudgetError):
    """The requested tolerance is below the certified error budget."""

    pass


class ObservableNotQuadratic(ModelError):
    """Ring-diagram evaluation needs one-body kernels for every observable."""

    pass


class DegenerateFit(IdentityCheckFailure):
    """All fit samples are below the numerical floor."""

    pass


class JobBudgetExceeded(BudgetError):
    """A sweep grid has more points than the configured job budget."""

    pass


class ContourTruncationWarning(UserWarning):
    """Truncating the inverse-Laplace contour leaves a tail above tolerance."""

    pass
