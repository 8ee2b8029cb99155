# wickbench/runs/verification.py
"""
Identity-check run kinds: wick-check and kubo.

Each check compares two independently computed sides and records a pass/fail
verdict in the manifest; a failed verdict makes the run exit with status 1.
"""

import logging
import math
from dataclasses import replace

from wickbench.equilibrium import gibbs_state
from wickbench.results import ResultRecord
from wickbench.runner import RunContext, RunOutcome, RunRegistry
from wickbench.switch import approximation_gap, derivative_bound_ratio, periodize
from wickbench.wick_bridge import (
    euclidean_estimate,
    factorization_check,
    kubo_check,
    kubo_sweep,
    linear_response_extrapolation,
    torus_rewriting_residual,
    verify_basic_deformation,
    verify_wick_rotation,
)

logger = logging.getLogger(__name__)

REAL_TIME_ORDERS = 2
SWITCH_GAP_SAMPLES = 100
# (β, η) pairs as multiples of the configured ones
SWITCH_GAP_SCALES = ((1.0, 1.0), (2.0, 1.0), (1.0, 0.5), (0.5, 2.0), (2.0, 0.5))
DEFORMATION_TOL = 1e-5
IDENTITY_TOL = 1e-10
# gap shrinks by a factor in [1.7, 2.3] per doubling of β
KUBO_SLOPE_RANGE = (-math.log2(2.3), -math.log2(1.7))


class EuclideanRow(ResultRecord):
    order: int
    beta: float
    t: float
    value: complex
    quadrature_error: float
    nodes: int


def register_verification_runs(registry: RunRegistry) -> None:
    """
    Register the identity-check run kinds.

    Args:
        registry: The run registry
    """

    @registry.run("wick-check")
    def wick_check(ctx: RunContext) -> RunOutcome:
        """Real-time coefficients against their Euclidean rewriting, plus the identities behind it."""
        exp = ctx.experiment
        controls = ctx.config.controls
        driven, P, O = exp.driven, exp.perturbation, exp.observable
        ens = gibbs_state(exp.hamiltonian, exp.beta, exp.mu, controls.exponent_budget)
        ps = periodize(exp.switch, exp.beta, driven.eta)
        propagation = replace(exp.propagation, periodized=ps)

        outcome = RunOutcome()
        for n in range(1, min(ctx.order, REAL_TIME_ORDERS) + 1):
            report = verify_wick_rotation(
                driven, ens, O, n, exp.t, propagation,
                tolerance=controls.tolerance,
                tolerance_multiplier=controls.tolerance_multiplier,
            )
            outcome.records.append(report)
            outcome.verdict(f"wick_rotation:n={n}", report.passed)
            outcome.budgets[f"wick_rotation:n={n}"] = report.budget

        for n in range(REAL_TIME_ORDERS + 1, ctx.order + 1):
            estimate = euclidean_estimate(ens, P, O, ps, n, exp.t, exp.quadrature)
            outcome.records.append(
                EuclideanRow(
                    anchor=f"euclidean_coefficient:n={n}",
                    order=n,
                    beta=exp.beta,
                    t=exp.t,
                    value=estimate.value,
                    quadrature_error=estimate.quadrature_error,
                    nodes=estimate.nodes,
                )
            )

        deformation = verify_basic_deformation(ens, P, O, ps, exp.t, 0, propagation)
        outcome.records.append(deformation)
        outcome.verdict(
            "basic_deformation",
            deformation.residual
            <= DEFORMATION_TOL
            + deformation.real_time_error
            + deformation.euclidean_error
            + deformation.truncation_bound,
        )

        times = [float(s) for s in ctx.rng.uniform(0.0, exp.beta, size=ctx.order)]
        factorization = factorization_check(ens, P, O, times, ps, exp.t, exp.quadrature)
        outcome.records.append(factorization)
        scale = max(1.0, abs(factorization.moment))
        outcome.verdict(
            "moment_cumulant",
            max(factorization.partition_residual, factorization.subset_residual)
            <= IDENTITY_TOL * scale,
        )

        torus = torus_rewriting_residual(ens, P, O, ps, ctx.order, exp.t, exp.quadrature)
        outcome.records.append(torus)
        outcome.verdict(
            "torus_rewriting",
            torus.torus_residual <= torus.tolerance,
        )

        gaps = []
        for beta_scale, eta_scale in SWITCH_GAP_SCALES:
            beta, eta = exp.beta * beta_scale, driven.eta * eta_scale
            scaled = periodize(exp.switch, beta, eta)
            gaps.extend(
                approximation_gap(exp.switch, scaled, float(t))
                for t in -ctx.rng.uniform(0.0, 10.0 / eta, size=SWITCH_GAP_SAMPLES)
            )
        outcome.records.extend(gaps)
        outcome.verdict(
            "switch_approximation",
            all(
                math.isfinite(gap.uniform_bound)
                and gap.gap <= gap.uniform_bound * (1 + 1e-9) + 1e-12
                for gap in gaps
            ),
        )
        outcome.records.extend(
            derivative_bound_ratio(exp.switch, exp.beta, driven.eta, j) for j in (1, 2)
        )
        outcome.budgets["periodized_tail"] = ps.tail_bound
        return outcome

    @registry.run("kubo")
    def kubo(ctx: RunContext) -> RunOutcome:
        """First-order response three ways, its β trend and the ε extrapolation."""
        exp = ctx.experiment
        driven, O = exp.driven, exp.observable
        ens = gibbs_state(exp.hamiltonian, exp.beta, exp.mu, ctx.config.controls.exponent_budget)

        outcome = RunOutcome()
        report = kubo_check(driven, ens, O, exp.t, exp.propagation)
        outcome.records.append(report)
        outcome.budgets["real_time_budget"] = report.real_time_budget

        betas = ctx.axis("beta", exp.beta)
        if len(betas) > 1:
            reports, fit = kubo_sweep(driven, betas, exp.mu, O, exp.t, exp.propagation)
            outcome.records.extend(reports)
            if fit is not None:
                outcome.summary.append(fit)
                low, high = KUBO_SLOPE_RANGE
                outcome.verdict("kubo_gap_vs_beta", low <= fit.slope <= high)

        epsilons = ctx.axis("epsilon", driven.epsilon)
        if len(epsilons) > 1:
            rows, extrapolation = linear_response_extrapolation(
                driven, ens, O, exp.t, epsilons, exp.propagation
            )
            outcome.records.extend(rows)
            outcome.summary.append(extrapolation)
            outcome.verdict("linear_response_extrapolation", extrapolation.passed)
        return outcome
