# wickbench/runs/dynamics.py
"""Real-time run kinds: evolve and duhamel."""

import logging
import math
from dataclasses import replace
from typing import List

import numpy as np

from wickbench.equilibrium import gibbs_state
from wickbench.lattice_fock import density
from wickbench.realtime import (
    DuhamelEstimate,
    PropagationControls,
    duhamel_estimate,
    dynamics_gap,
    evolve_gibbs,
    lieb_robinson_probe,
)
from wickbench.results import ResultRecord
from wickbench.runner import RunContext, RunOutcome, RunRegistry
from wickbench.switch import approximation_gap, periodize
from wickbench.wick_bridge import main_expansion_check

logger = logging.getLogger(__name__)

LIEB_ROBINSON_ELAPSED = (1.0, 2.0)
MAIN_EXPANSION_MIN_SLOPE = 2.7


class EvolveRow(ResultRecord):
    source: str
    beta: float
    eta: float
    epsilon: float
    t: float
    t_start: float
    steps: int
    step: float
    value: complex
    equilibrium: complex
    instantaneous: complex
    gap: float
    trace_defect: float
    min_eigenvalue: float
    error_estimate: float


class DuhamelRow(ResultRecord):
    order: int
    value: complex
    quadrature_error: float
    truncation_bound: float
    budget: float
    nodes: int


class SeriesRow(ResultRecord):
    epsilon: float
    orders: int
    evolved: complex
    partial_sum: complex
    remainder: float


def _duhamel_row(estimate: DuhamelEstimate) -> DuhamelRow:
    return DuhamelRow(
        anchor=f"duhamel_real_time:n={estimate.order}",
        order=estimate.order,
        value=estimate.value,
        quadrature_error=estimate.quadrature_error,
        truncation_bound=estimate.truncation_bound,
        budget=estimate.budget,
        nodes=estimate.nodes,
    )


def register_dynamics_runs(registry: RunRegistry) -> None:
    """
    Register the real-time run kinds.

    Args:
        registry: The run registry
    """

    @registry.run("evolve")
    def evolve(ctx: RunContext) -> RunOutcome:
        """Driven states under the true and periodized switch, with locality and β trends."""
        exp = ctx.experiment
        driven, O = exp.driven, exp.observable
        ens = gibbs_state(exp.hamiltonian, exp.beta, exp.mu, ctx.config.controls.exponent_budget)
        ps = periodize(exp.switch, exp.beta, driven.eta)
        equilibrium = ens.expectation(O)
        sources = {
            "true": (replace(exp.propagation, source="true"), driven.at(exp.t)),
            "periodized": (
                replace(exp.propagation, source="periodized", periodized=ps),
                driven.periodized_at(ps, exp.t),
            ),
        }

        outcome = RunOutcome()
        for source, (controls, instantaneous_h) in sources.items():
            state = evolve_gibbs(driven, ens, exp.t, controls, ctx.digest)
            value = state.expectation(O)
            instantaneous = gibbs_state(instantaneous_h, exp.beta, exp.mu).expectation(O)
            outcome.records.append(
                EvolveRow(
                    anchor=f"evolved_state:{source}",
                    source=source,
                    beta=exp.beta,
                    eta=driven.eta,
                    epsilon=driven.epsilon,
                    t=exp.t,
                    t_start=state.provenance["t_start"],
                    steps=state.provenance["steps"],
                    step=state.provenance["step"],
                    value=value,
                    equilibrium=equilibrium,
                    instantaneous=instantaneous,
                    gap=float(abs(value - instantaneous)),
                    trace_defect=float(abs(state.trace - 1.0)),
                    min_eigenvalue=state.min_eigenvalue,
                    error_estimate=state.provenance["error_estimate"],
                )
            )
        outcome.records.append(approximation_gap(exp.switch, ps, exp.t))

        probes = [density(exp.basis, x) for x in range(exp.geometry.n_sites)]
        times = [(exp.t, exp.t - elapsed) for elapsed in LIEB_ROBINSON_ELAPSED]
        report = lieb_robinson_probe(
            driven, exp.basis, O, probes, times, replace(exp.propagation, source="true")
        )
        outcome.records.extend(report.rows)
        outcome.summary.extend(report.fits)

        betas = ctx.axis("beta", exp.beta)
        if len(betas) > 1:
            rows, fit = dynamics_gap(driven, betas, exp.mu, O, exp.t, exp.propagation)
            outcome.records.extend(rows)
            if fit is not None:
                outcome.summary.append(fit)
        outcome.budgets["unitarity_tol"] = exp.propagation.unitarity_tol
        outcome.budgets["switch_signed_mass"] = list(exp.switch.signed_mass())
        return outcome

    @registry.run("duhamel")
    def duhamel(ctx: RunContext) -> RunOutcome:
        """Real-time Duhamel coefficients, their partial sums and the Euclidean remainder."""
        exp = ctx.experiment
        driven, O = exp.driven, exp.observable
        ens = gibbs_state(exp.hamiltonian, exp.beta, exp.mu, ctx.config.controls.exponent_budget)
        controls: PropagationControls = replace(exp.propagation, source="true", periodized=None)

        outcome = RunOutcome()
        estimates = [duhamel_estimate(driven, ens, O, n, exp.t, controls) for n in range(1, ctx.order + 1)]
        outcome.records.extend(_duhamel_row(estimate) for estimate in estimates)
        outcome.budgets["duhamel_budget"] = [estimate.budget for estimate in estimates]

        equilibrium = ens.expectation(O)
        series_rows: List[SeriesRow] = []
        for epsilon in ctx.axis("epsilon", driven.epsilon):
            evolved = evolve_gibbs(driven.with_epsilon(epsilon), ens, exp.t, controls).expectation(O)
            partial = equilibrium + sum(
                (-1j * epsilon) ** estimate.order * estimate.value for estimate in estimates
            )
            series_rows.append(
                SeriesRow(
                    anchor=f"duhamel_partial_sum:n={ctx.order}",
                    epsilon=epsilon,
                    orders=ctx.order,
                    evolved=evolved,
                    partial_sum=complex(partial),
                    remainder=float(abs(evolved - partial)),
                )
            )
        outcome.records.extend(series_rows)

        epsilons = ctx.axis("epsilon", driven.epsilon)
        if len(epsilons) > 1:
            rows, fit = main_expansion_check(driven, ens, O, exp.t, epsilons, exp.propagation)
            outcome.records.extend(rows)
            if fit is not None:
                outcome.summary.append(fit)
                outcome.verdict(
                    "main_expansion_slope",
                    math.isfinite(fit.slope) and fit.slope >= MAIN_EXPANSION_MIN_SLOPE,
                )
        outcome.budgets["nodes"] = int(np.sum([estimate.nodes for estimate in estimates]))
        return outcome
