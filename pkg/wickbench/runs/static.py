# wickbench/runs/static.py
"""
Equilibrium run kinds: spectrum, gibbs, twopoint and assumption1.

None of these propagate in real time; they diagonalize, take Gibbs traces or
evaluate quasi-free formulas, and check the results against each other.
"""

import logging
from typing import List

import numpy as np

from wickbench.config.schema import ConfigurationError
from wickbench.equilibrium import (
    TimedObservable,
    gibbs_invariance_residual,
    gibbs_state,
    instantaneous_gibbs_expectation,
    kms_residual,
    time_ordered_cumulant,
)
from wickbench.exceptions import DegenerateFit
from wickbench.freefermion import (
    assumption1_integral,
    build_two_point_cache,
    ring_cumulant,
    space_decay_fit,
    two_point,
    two_point_trace,
)
from wickbench.hamiltonians import local_term_norm_max, one_body_gap
from wickbench.lattice_fock import random_local_operator
from wickbench.results import ResultRecord
from wickbench.runner import RunContext, RunOutcome, RunRegistry
from wickbench.switch import periodize
from wickbench.wick_bridge import coefficient_bound_check

logger = logging.getLogger(__name__)

KMS_SAMPLES = 100
TWO_POINT_SAMPLES = 50
IDENTITY_TOL = 1e-10
DUAL_PATH_TOL = 1e-7
RING_TOL = 1e-8


class SpectrumRow(ResultRecord):
    index: int
    particle_number: int
    energy: float


class SpectrumSummary(ResultRecord):
    dimension: int
    ground_energy: float
    one_body_gap: float
    local_term_norm_max: float
    kernel_entry_bound: float


class GibbsRow(ResultRecord):
    beta: float
    mu: float
    log_partition: float
    trace_defect: float
    min_weight: float
    observable: complex
    instantaneous_direct: complex
    instantaneous_series: complex
    series_gap: float


class ResidualRow(ResultRecord):
    t1: float
    t2: float
    residual: float


class TwoPointRow(ResultRecord):
    t: float
    x: int
    t_p: float
    y: int
    value: complex
    trace_value: complex
    deviation: float
    antiperiodicity_residual: float


class RingRow(ResultRecord):
    order: int
    times: str
    ring_value: complex
    exact_value: complex
    deviation: float


def register_static_runs(registry: RunRegistry) -> None:
    """
    Register the equilibrium run kinds.

    Args:
        registry: The run registry
    """

    @registry.run("spectrum")
    def spectrum(ctx: RunContext) -> RunOutcome:
        """Many-body eigenvalues of H, sector by sector, with one-body diagnostics."""
        exp = ctx.experiment
        numbers = exp.basis.particle_numbers
        levels = []
        for n in np.unique(numbers):
            sector = np.nonzero(numbers == n)[0]
            block = exp.hamiltonian.matrix[np.ix_(sector, sector)]
            levels.extend((float(e), int(n)) for e in np.linalg.eigvalsh(block))
        levels.sort()

        outcome = RunOutcome()
        outcome.records = [
            SpectrumRow(anchor="many_body_spectrum", index=i, particle_number=n, energy=e)
            for i, (e, n) in enumerate(levels)
        ]
        outcome.summary.append(
            SpectrumSummary(
                anchor="spectrum_summary",
                dimension=exp.basis.dimension,
                ground_energy=levels[0][0],
                one_body_gap=one_body_gap(exp.kernel, exp.mu),
                local_term_norm_max=local_term_norm_max(exp.basis, exp.kernel, exp.interaction),
                kernel_entry_bound=exp.kernel.effective_bound,
            )
        )
        outcome.budgets["modes"] = exp.geometry.n_sites
        return outcome

    @registry.run("gibbs")
    def gibbs(ctx: RunContext) -> RunOutcome:
        """Gibbs state, KMS and invariance residuals at seeded random times."""
        exp = ctx.experiment
        config = ctx.config
        ens = gibbs_state(exp.hamiltonian, exp.beta, exp.mu, config.controls.exponent_budget)
        weights = ens.weights
        direct = instantaneous_gibbs_expectation(exp.driven, exp.beta, exp.mu, exp.observable, exp.t)
        series = instantaneous_gibbs_expectation(
            exp.driven, exp.beta, exp.mu, exp.observable, exp.t,
            mode="series", n_max=2, controls=exp.quadrature,
        )
        outcome = RunOutcome()
        head = GibbsRow(
            anchor="gibbs_state",
            beta=exp.beta,
            mu=exp.mu,
            log_partition=ens.log_partition,
            trace_defect=float(abs(np.sum(weights) - 1.0)),
            min_weight=float(np.min(weights)),
            observable=ens.expectation(exp.observable),
            instantaneous_direct=direct,
            instantaneous_series=series,
            series_gap=float(abs(direct - series)),
        )
        outcome.records.append(head)

        kms: List[ResidualRow] = []
        for t1, t2 in ctx.rng.uniform(0.0, exp.beta, size=(KMS_SAMPLES, 2)):
            O1 = random_local_operator(exp.basis, ctx.rng)
            O2 = random_local_operator(exp.basis, ctx.rng)
            kms.append(
                ResidualRow(
                    anchor="kms_residual",
                    t1=float(t1),
                    t2=float(t2),
                    residual=kms_residual(ens, O1, O2, t1, t2),
                )
            )
        invariance = [
            ResidualRow(
                anchor="gibbs_invariance_residual",
                t1=float(t),
                t2=0.0,
                residual=gibbs_invariance_residual(ens, exp.observable, float(t)),
            )
            for t in ctx.rng.uniform(-10.0, 10.0, size=KMS_SAMPLES)
        ]
        outcome.records.extend(kms + invariance)

        outcome.verdict("normalization", head.trace_defect <= IDENTITY_TOL and head.min_weight >= 0)
        outcome.verdict("kms", max(row.residual for row in kms) <= IDENTITY_TOL)
        outcome.verdict("gibbs_invariance", max(row.residual for row in invariance) <= IDENTITY_TOL)
        outcome.budgets["exponent_budget"] = ens.exponent_budget
        outcome.budgets["spread"] = ens.spread
        return outcome

    @registry.run("twopoint")
    def twopoint(ctx: RunContext) -> RunOutcome:
        """Quasi-free g₂ against Fock traces, ring cumulants against exact cumulants."""
        exp = ctx.experiment
        if exp.interacting:
            raise ConfigurationError("model.coupling: twopoint runs need a non-interacting model")
        cache = build_two_point_cache(exp.kernel, exp.beta, exp.mu)
        ens = gibbs_state(exp.hamiltonian, exp.beta, exp.mu, ctx.config.controls.exponent_budget)
        n = exp.geometry.n_sites

        outcome = RunOutcome()
        rows: List[TwoPointRow] = []
        for _ in range(TWO_POINT_SAMPLES):
            t, t_p = (float(v) for v in ctx.rng.uniform(0.0, exp.beta, size=2))
            x, y = (int(v) for v in ctx.rng.integers(0, n, size=2))
            value = two_point(cache, t, x, t_p, y)
            oracle = two_point_trace(ens, exp.basis, t, x, t_p, y)
            shifted = two_point(cache, t + exp.beta, x, t_p, y)
            rows.append(
                TwoPointRow(
                    anchor="two_point",
                    t=t,
                    x=x,
                    t_p=t_p,
                    y=y,
                    value=value,
                    trace_value=oracle,
                    deviation=float(abs(value - oracle)),
                    antiperiodicity_residual=float(abs(shifted + value)),
                )
            )
        outcome.records.extend(rows)

        items = [exp.perturbation_kernel] * ctx.order + [exp.observable_kernel]
        operators = [exp.perturbation] * ctx.order + [exp.observable]
        ring_rows: List[RingRow] = []
        for _ in range(5):
            times = [float(v) for v in ctx.rng.uniform(0.0, exp.beta, size=ctx.order)] + [0.0]
            ring = ring_cumulant(cache, exp.geometry, items, times)
            exact = time_ordered_cumulant(
                ens,
                [TimedObservable(op, s) for op, s in zip(operators, times)],
                ctx.config.controls.max_cumulant_order,
            )
            ring_rows.append(
                RingRow(
                    anchor=f"ring_cumulant:n={ctx.order}",
                    order=ctx.order,
                    times=" ".join(f"{s:.12g}" for s in times),
                    ring_value=ring,
                    exact_value=exact,
                    deviation=float(abs(ring - exact)),
                )
            )
        outcome.records.extend(ring_rows)

        try:
            outcome.summary.append(space_decay_fit(cache, exp.geometry, exp.observable_template.site))
        except DegenerateFit as e:
            logger.warning(f"Space decay fit skipped: {e}")

        outcome.verdict("trace_oracle", max(row.deviation for row in rows) <= IDENTITY_TOL)
        outcome.verdict(
            "antiperiodicity", max(row.antiperiodicity_residual for row in rows) <= 1e-12
        )
        outcome.verdict("ring_cumulant", max(row.deviation for row in ring_rows) <= RING_TOL)
        return outcome

    @registry.run("assumption1")
    def assumption1(ctx: RunContext) -> RunOutcome:
        """Integrated cumulants across β, by exact traces and (for λ = 0) ring diagrams."""
        exp = ctx.experiment
        controls = ctx.config.controls
        n = ctx.order
        outcome = RunOutcome()
        for beta in ctx.axis("beta", exp.beta):
            ens = gibbs_state(exp.hamiltonian, beta, exp.mu, controls.exponent_budget)
            exact = assumption1_integral(
                ens, exp.basis, exp.observable_template, exp.perturbation_template,
                n, controls.weight_power, exp.quadrature, controls.max_cumulant_order,
            )
            outcome.records.append(exact)
            if not exp.interacting:
                cache = build_two_point_cache(exp.kernel, beta, exp.mu)
                ring = assumption1_integral(
                    cache, exp.basis, exp.observable_template, exp.perturbation_template,
                    n, controls.weight_power, exp.quadrature,
                )
                outcome.records.append(ring)
                outcome.verdict(
                    f"dual_path:beta={beta:g}",
                    abs(exact.value - ring.value) <= DUAL_PATH_TOL * max(1.0, exact.value),
                )
            ps = periodize(exp.switch, beta, exp.driven.eta)
            bound = coefficient_bound_check(
                ens, exp.basis, exp.observable_template, exp.perturbation_template,
                ps, n, exp.t, exp.quadrature, controls.weight_power,
            )
            outcome.records.append(bound)
            outcome.verdict(f"coefficient_bound:beta={beta:g}", bound.passed)
        outcome.budgets["max_evaluations"] = controls.max_evaluations
        return outcome
