# wickbench/wick_bridge.py
"""
Euclidean coefficients and the numerical checks that tie them to real-time dynamics.

Key Components:
- euclidean_estimate / euclidean_coefficient: I^(n) = ∫_{[0,β)^n} Π g_{β,η}(t − i s_j)
  ⟨T γ_{s1}(P); ...; γ_{sn}(P); O⟩ ds, as n! times an ordered-simplex rule
- verify_wick_rotation: c_n from the Duhamel recursion against ((−i)^n/n!) I^(n)
- verify_basic_deformation: the single-commutator contour identity
- factorization_check / torus_rewriting_residual: moment-cumulant identities behind
  the rewriting of I^(n)
- adiabatic_sweep / improved_adiabatic_check: gaps to the instantaneous Gibbs state
- kubo_check / linear_response_extrapolation / main_expansion_check: the first and
  second order of the expansion in ε
- coefficient_bound_check: |I^(n)| against ‖h‖₁^n times the integrated cumulant

Every report carries its own error budget; verdicts compare against the budget.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from wickbench.equilibrium import (
    GibbsEnsemble,
    TimedObservable,
    gibbs_state,
    moments_from_cumulants,
    time_ordered_cumulant,
    time_ordered_expectation,
)
from wickbench.exceptions import (
    BudgetUnattainable,
    DegenerateFit,
    OperatorContractError,
    PositiveTimeUnsupported,
    WickbenchError,
)
from wickbench.freefermion import assumption1_integral
from wickbench.hamiltonians import DrivenHamiltonian, LocalObservable
from wickbench.lattice_fock import FockBasis, FockOperator
from wickbench.quadrature import (
    QuadratureControls,
    collapsed_simplex_rule,
    gauss_legendre_panels,
    ordered_simplex_rule,
)
from wickbench.realtime import (
    WICK_CUTOFF_BETAS,
    PropagationControls,
    SlopeReport,
    duhamel_estimate,
    evolve_gibbs,
    fit_line,
    fit_loglog,
)
from wickbench.results import ResultRecord
from wickbench.switch import (
    PeriodizedSwitch,
    eval_periodized,
    exponential_switch,
    flat_switch,
    periodize,
    periodized_tail_integral,
)

logger = logging.getLogger(__name__)

MAX_EUCLIDEAN_ORDER = 3
# relative rounding floor added to every certified budget
ROUNDING_FLOOR = 1e-10
IMAG_RESIDUE_TOL = 1e-9
# complex entries held at once by the vectorized pair correlations
_PAIR_BUDGET = 2_000_000


@dataclass(frozen=True)
class EuclideanEstimate:
    """I^(n) with its node-doubling error (nan when not estimated)."""

    order: int
    value: complex
    quadrature_error: float
    nodes: int


def _boltzmann_kernel(ens: GibbsEnsemble, s: np.ndarray) -> np.ndarray:
    """e^{−(β−s)Ẽ_a − sẼ_b}/Z for each s, shape (len(s), D, D)."""
    energies = ens.shifted
    log_z = math.log(float(np.sum(np.exp(-ens.beta * energies))))
    exponent = (
        -(ens.beta - s)[:, None, None] * energies[None, :, None]
        - s[:, None, None] * energies[None, None, :]
        - log_z
    )
    return np.exp(exponent)


def _pair_moment(ens: GibbsEnsemble, first: np.ndarray, second: np.ndarray, s: np.ndarray) -> np.ndarray:
    """⟨γ_s(A) B⟩ for s in [0, β], with A and B already in the K eigenbasis."""
    weights = first * second.T
    values = np.empty(s.size, dtype=complex)
    size = max(1, _PAIR_BUDGET // weights.size)
    for i in range(0, s.size, size):
        kernel = _boltzmann_kernel(ens, s[i : i + size])
        values[i : i + size] = np.einsum("kab,ab->k", kernel, weights)
    return values


def connected_pair(ens: GibbsEnsemble, A: FockOperator, B: FockOperator, s: np.ndarray) -> np.ndarray:
    """⟨γ_s(A); B⟩ at each s in [0, β]."""
    s = np.asarray(s, dtype=float)
    first, second = ens.to_eigenbasis(A), ens.to_eigenbasis(B)
    mean = ens.expectation(A) * ens.expectation(B)
    return _pair_moment(ens, first, second, s) - mean


def static_response(ens: GibbsEnsemble, A: FockOperator, B: FockOperator) -> complex:
    """
    ∫₀^β ⟨γ_s(A); B⟩ ds in closed form.

    Σ_ab A_ab B_ba (p_b − p_a)/(Ẽ_a − Ẽ_b), with p_a β on (near) degenerate pairs.
    """
    first, second = ens.to_eigenbasis(A), ens.to_eigenbasis(B)
    p = ens.weights
    omega = np.subtract.outer(ens.shifted, ens.shifted)
    x = ens.beta * omega
    # p_b − p_a taken from the larger weight of the pair
    difference = np.where(
        omega <= 0,
        p[:, None] * np.expm1(np.minimum(x, 0.0)),
        -p[None, :] * np.expm1(-np.maximum(x, 0.0)),
    )
    degenerate = np.abs(x) < 1e-8
    factor = np.where(
        degenerate, ens.beta * p[:, None], difference / np.where(degenerate, 1.0, omega)
    )
    total = np.sum(first * second.T * factor)
    return complex(total - ens.beta * ens.expectation(A) * ens.expectation(B))


def _timed(P: FockOperator, O: FockOperator, times: Sequence[float]) -> List[TimedObservable]:
    items = [TimedObservable(P, float(s)) for s in times]
    items.append(TimedObservable(O, 0.0))
    return items


def _simplex_integral(
    ens: GibbsEnsemble,
    P: FockOperator,
    O: FockOperator,
    ps: PeriodizedSwitch,
    n: int,
    t: float,
    controls: QuadratureControls,
    connected: bool = True,
    max_order: int = 4,
) -> Tuple[complex, int]:
    """∫_{Δ^n} Π g_{β,η}(t − i s_j) ⟨γ_{s1}(P) ... γ_{sn}(P) O⟩ (truncated if connected)."""
    nodes, weights = ordered_simplex_rule(n, ens.beta, controls)
    switch = np.prod(eval_periodized(ps, t - 1j * nodes), axis=1)
    if n == 1:
        values = connected_pair(ens, P, O, nodes[:, 0])
        if not connected:
            values = values + ens.expectation(P) * ens.expectation(O)
    elif connected:
        values = np.array(
            [time_ordered_cumulant(ens, _timed(P, O, row), max_order) for row in nodes]
        )
    else:
        values = np.array([time_ordered_expectation(ens, _timed(P, O, row)) for row in nodes])
    return complex(np.sum(weights * switch * values)), int(weights.size)


def _check_order(n: int, upper: int) -> None:
    if not 1 <= n <= upper:
        raise ValueError(f"order must be between 1 and {upper}, got {n}")


def _check_time(t: float) -> None:
    if t > 0:
        raise PositiveTimeUnsupported(f"Euclidean coefficients need t <= 0, got {t}")


def euclidean_estimate(
    ens: GibbsEnsemble,
    P: FockOperator,
    O: FockOperator,
    ps: PeriodizedSwitch,
    n: int,
    t: float,
    controls: Optional[QuadratureControls] = None,
    estimate_error: bool = True,
    max_order: int = 4,
) -> EuclideanEstimate:
    """
    I^(n) = n! ∫_{Δ^n} Π g_{β,η}(t − i s_j) ⟨γ_{s1}(P); ...; γ_{sn}(P); O⟩ ds.

    With estimate_error the value comes from the refined rule and the error is the
    difference to the base rule.

    Raises:
        QuadratureBudgetExceeded: if a simplex rule exceeds the evaluation budget
        PositiveTimeUnsupported: if t > 0
    """
    _check_order(n, MAX_EUCLIDEAN_ORDER)
    _check_time(t)
    if not math.isclose(ps.beta, ens.beta, rel_tol=1e-12):
        raise ValueError(f"periodized switch has beta={ps.beta}, ensemble beta={ens.beta}")
    controls = controls or QuadratureControls()
    scale = math.factorial(n)

    coarse, nodes = _simplex_integral(ens, P, O, ps, n, t, controls, max_order=max_order)
    if not estimate_error:
        return EuclideanEstimate(n, scale * coarse, math.nan, nodes)
    fine, fine_nodes = _simplex_integral(
        ens, P, O, ps, n, t, controls.refined(), max_order=max_order
    )
    estimate = EuclideanEstimate(n, scale * fine, scale * abs(fine - coarse), nodes + fine_nodes)
    logger.debug(
        f"I^({n})(t={t}) = {estimate.value:.10g} at beta={ens.beta}: "
        f"error {estimate.quadrature_error:.3g}, {estimate.nodes} nodes"
    )
    return estimate


def euclidean_coefficient(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    n: int,
    t: float,
    ps: Optional[PeriodizedSwitch] = None,
    controls: Optional[QuadratureControls] = None,
) -> complex:
    """I^(n) for the driven perturbation; see euclidean_estimate."""
    ps = ps or periodize(driven.switch, ens.beta, driven.eta)
    return euclidean_estimate(ens, driven.perturbation, O, ps, n, t, controls).value


class WickReport(ResultRecord):
    order: int
    beta: float
    eta: float
    t: float
    real_time_value: complex
    euclidean_value: complex
    euclidean_coefficient: complex
    discrepancy: float
    relative_discrepancy: float
    real_time_budget: float
    euclidean_error: float
    budget: float
    tolerance_multiplier: float
    passed: bool


def _wick_controls(
    ens: GibbsEnsemble, ps: PeriodizedSwitch, t: float, controls: PropagationControls
) -> PropagationControls:
    start = controls.t_start
    if start is None:
        start = min(-WICK_CUTOFF_BETAS * ens.beta, t)
    return replace(controls, source="periodized", periodized=ps, t_start=start)


def verify_wick_rotation(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    n: int,
    t: float,
    controls: Optional[PropagationControls] = None,
    tolerance: Optional[float] = None,
    tolerance_multiplier: float = 1.0,
) -> WickReport:
    """
    Compare c_n (real time, periodized switch) with ((−i)^n/n!) I^(n).

    The budget is the Duhamel truncation tail plus both node-doubling estimates plus
    a rounding floor of 1e-10 relative to the value.

    Raises:
        BudgetUnattainable: if tolerance is below the certified budget
    """
    _check_order(n, 2)
    controls = controls or PropagationControls()
    ps = controls.periodized if controls.periodized is not None else periodize(
        driven.switch, ens.beta, driven.eta
    )
    real = duhamel_estimate(driven, ens, O, n, t, _wick_controls(ens, ps, t, controls))
    euclid = euclidean_estimate(ens, driven.perturbation, O, ps, n, t, controls.quadrature)

    factor = (-1j) ** n / math.factorial(n)
    euclidean_value = factor * euclid.value
    discrepancy = abs(real.value - euclidean_value)
    scale = max(abs(real.value), abs(euclidean_value))
    budget = (
        real.budget
        + abs(factor) * euclid.quadrature_error
        + ROUNDING_FLOOR * max(1.0, scale)
    )
    if tolerance is not None and tolerance < budget:
        raise BudgetUnattainable(
            f"requested tolerance {tolerance:.3g} is below the certified budget {budget:.3g} "
            f"for order {n}; refine the quadrature or lengthen the cutoff"
        )

    report = WickReport(
        anchor=f"wick_rotation:n={n}",
        order=n,
        beta=ens.beta,
        eta=driven.eta,
        t=t,
        real_time_value=real.value,
        euclidean_value=euclidean_value,
        euclidean_coefficient=euclid.value,
        discrepancy=discrepancy,
        relative_discrepancy=discrepancy / scale if scale > 0 else 0.0,
        real_time_budget=real.budget,
        euclidean_error=euclid.quadrature_error,
        budget=budget,
        tolerance_multiplier=tolerance_multiplier,
        passed=discrepancy <= tolerance_multiplier * budget,
    )
    log = logger.info if report.passed else logger.warning
    log(
        f"Wick rotation n={n} at beta={ens.beta}, t={t}: discrepancy {discrepancy:.3g}, "
        f"budget {budget:.3g} ({'pass' if report.passed else 'fail'})"
    )
    return report


class DeformationReport(ResultRecord):
    beta: float
    t: float
    real_time_value: complex
    euclidean_value: complex
    residual: float
    real_time_error: float
    euclidean_error: float
    truncation_bound: float


def verify_basic_deformation(
    ens: GibbsEnsemble,
    B: FockOperator,
    C: FockOperator,
    ps: PeriodizedSwitch,
    t: float,
    j: int = 0,
    controls: Optional[PropagationControls] = None,
) -> DeformationReport:
    """
    ∫_{−T}^{t} g_{β,η}(r) ⟨[τ_r(B), C]⟩ dr against i ∫₀^β g_{β,η}(t − is) ⟨γ_s(τ_t(B)) C⟩ ds.

    Both sides are evaluated entrywise in the K eigenbasis: the left integrand is
    Σ_ab (p_a − p_b) B_ab C_ba e^{irω_ab}, the right one Σ_ab p_a e^{(s+it)ω_ab} B_ab C_ba.

    Raises:
        OperatorContractError: if B does not commute with N
    """
    if j != 0:
        raise ValueError(f"only the single-commutator deformation (j = 0) is available, got {j}")
    if not B.gauge_invariant:
        raise OperatorContractError("basic deformation needs a gauge-invariant B")
    _check_time(t)
    controls = controls or PropagationControls()
    quadrature = controls.quadrature
    start = controls.t_start if controls.t_start is not None else min(
        -WICK_CUTOFF_BETAS * ens.beta, t
    )

    first, second = ens.to_eigenbasis(B), ens.to_eigenbasis(C)
    omega = np.subtract.outer(ens.shifted, ens.shifted)
    p = ens.weights
    commutator_weights = (p[:, None] - p[None, :]) * first * second.T
    size = max(1, _PAIR_BUDGET // omega.size)

    def real_time(width: float) -> complex:
        nodes, weights = gauss_legendre_panels(start, t, width, quadrature.order)
        total = 0.0 + 0.0j
        for i in range(0, nodes.size, size):
            r = nodes[i : i + size]
            phases = np.exp(1j * r[:, None, None] * omega[None, :, :])
            values = np.einsum("kab,ab->k", phases, commutator_weights)
            profile = np.real(eval_periodized(ps, r))
            total += np.sum(weights[i : i + size] * profile * values)
        return complex(total)

    def euclidean(width: float) -> complex:
        nodes, weights = gauss_legendre_panels(0.0, ens.beta, width, quadrature.order)
        values = _pair_moment(ens, first * np.exp(1j * t * omega), second, nodes)
        return complex(1j * np.sum(weights * eval_periodized(ps, t - 1j * nodes) * values))

    width = quadrature.panel_width
    if ens.spread > 0:
        width = min(width, 1.0 / ens.spread)
    lhs_coarse, lhs = real_time(width), real_time(width / 2)
    rhs_coarse, rhs = euclidean(width), euclidean(width / 2)
    truncation = 2.0 * B.norm() * C.norm() * periodized_tail_integral(ps, -start)

    report = DeformationReport(
        anchor="basic_deformation:j=0",
        beta=ens.beta,
        t=t,
        real_time_value=lhs,
        euclidean_value=rhs,
        residual=float(abs(lhs - rhs)),
        real_time_error=float(abs(lhs - lhs_coarse)),
        euclidean_error=float(abs(rhs - rhs_coarse)),
        truncation_bound=truncation,
    )
    logger.debug(f"Basic deformation at beta={ens.beta}, t={t}: residual {report.residual:.3g}")
    return report


class FactorizationReport(ResultRecord):
    order: int
    beta: float
    moment: complex
    partition_residual: float
    subset_residual: float
    vanishing_first: complex
    vanishing_second: complex


def _subset_factorization(ens: GibbsEnsemble, B: FockOperator, A: FockOperator, times: Sequence[float]) -> complex:
    """Σ_{J ⊆ {1..n}} ⟨γ_{s_J}(B); ...; A⟩ ⟨Π_{j∉J} γ_{s_j}(B)⟩ with J keeping the order."""
    n = len(times)
    total = 0.0 + 0.0j
    for size in range(n + 1):
        for chosen in itertools.combinations(range(n), size):
            rest = [k for k in range(n) if k not in chosen]
            connected = time_ordered_cumulant(ens, _timed(B, A, [times[k] for k in chosen]))
            remainder = time_ordered_expectation(
                ens, [TimedObservable(B, times[k]) for k in rest]
            )
            total += connected * remainder
    return complex(total)


def _vanishing_integral(
    ens: GibbsEnsemble, B: FockOperator, ps: PeriodizedSwitch, k: int, t: float, controls: QuadratureControls
) -> complex:
    """∫_{Δ^k} Π g_{β,η}(t − i s_j) ⟨γ_{s1}(B) ... γ_{sk}(B)⟩ ds; zero for g̃(0) = 0."""
    nodes, weights = ordered_simplex_rule(k, ens.beta, controls)
    switch = np.prod(eval_periodized(ps, t - 1j * nodes), axis=1)
    values = np.array(
        [time_ordered_expectation(ens, [TimedObservable(B, s) for s in row]) for row in nodes]
    )
    return complex(np.sum(weights * switch * values))


def factorization_check(
    ens: GibbsEnsemble,
    B: FockOperator,
    A: FockOperator,
    times: Sequence[float],
    ps: PeriodizedSwitch,
    t: float = 0.0,
    controls: Optional[QuadratureControls] = None,
) -> FactorizationReport:
    """
    Moment-cumulant identities at fixed times and the vanishing of disconnected
    switch-weighted integrals for k = 1, 2.
    """
    _check_order(len(times), MAX_EUCLIDEAN_ORDER)
    _check_time(t)
    controls = controls or QuadratureControls()
    items = _timed(B, A, times)
    moment = time_ordered_expectation(ens, items)
    partition = moments_from_cumulants(ens, items)
    subsets = _subset_factorization(ens, B, A, times)
    report = FactorizationReport(
        anchor=f"factorization:n={len(times)}",
        order=len(times),
        beta=ens.beta,
        moment=moment,
        partition_residual=float(abs(moment - partition)),
        subset_residual=float(abs(moment - subsets)),
        vanishing_first=_vanishing_integral(ens, B, ps, 1, t, controls),
        vanishing_second=_vanishing_integral(ens, B, ps, 2, t, controls),
    )
    logger.debug(
        f"Factorization n={report.order}: residuals {report.partition_residual:.3g}, "
        f"{report.subset_residual:.3g}; disconnected integrals "
        f"{abs(report.vanishing_first):.3g}, {abs(report.vanishing_second):.3g}"
    )
    return report


class TorusRewritingReport(ResultRecord):
    order: int
    beta: float
    t: float
    simplex_moment: complex
    simplex_cumulant: complex
    torus_cumulant: complex
    moment_residual: float
    torus_residual: float
    quadrature_error: float
    tolerance: float


def _torus_integral(
    ens: GibbsEnsemble,
    P: FockOperator,
    O: FockOperator,
    ps: PeriodizedSwitch,
    n: int,
    t: float,
    controls: QuadratureControls,
) -> complex:
    """∫_{[0,β)^n} Π g_{β,η}(t − i s_j) ⟨T γ_{s1}(P); ...; γ_{sn}(P); O⟩ ds, one collapsed rule per ordering."""
    nodes, weights = collapsed_simplex_rule(n, ens.beta, controls)
    total = 0.0 + 0.0j
    for ordering in itertools.permutations(range(n)):
        times = np.empty_like(nodes)
        times[:, list(ordering)] = nodes
        switch = np.prod(eval_periodized(ps, t - 1j * times), axis=1)
        values = np.array([time_ordered_cumulant(ens, _timed(P, O, row)) for row in times])
        total += np.sum(weights * switch * values)
    return complex(total)


def torus_rewriting_residual(
    ens: GibbsEnsemble,
    P: FockOperator,
    O: FockOperator,
    ps: PeriodizedSwitch,
    n: int,
    t: float,
    controls: Optional[QuadratureControls] = None,
) -> TorusRewritingReport:
    """
    n! ∫_{Δ^n} Π g·⟨γ(P) ... γ(P) O⟩ against I^(n) and against the torus integral.

    The torus side integrates the unordered cumulant over [0, β)^n with a collapsed
    tensor rule on every ordering, with its own nodes and the time ordering done
    pointwise. The two sides agree to within the tolerance, ten times the
    node-doubling error of the simplex side and at least 1e-9 relative.
    """
    _check_order(n, MAX_EUCLIDEAN_ORDER)
    _check_time(t)
    controls = controls or QuadratureControls()
    scale = math.factorial(n)
    moment, _ = _simplex_integral(ens, P, O, ps, n, t, controls, connected=False)
    coarse, _ = _simplex_integral(ens, P, O, ps, n, t, controls)
    cumulant, _ = _simplex_integral(ens, P, O, ps, n, t, controls.refined())
    torus = _torus_integral(ens, P, O, ps, n, t, controls)

    simplex_moment, simplex_cumulant = scale * moment, scale * cumulant
    error = scale * float(abs(cumulant - coarse))
    report = TorusRewritingReport(
        anchor=f"torus_rewriting:n={n}",
        order=n,
        beta=ens.beta,
        t=t,
        simplex_moment=simplex_moment,
        simplex_cumulant=simplex_cumulant,
        torus_cumulant=torus,
        moment_residual=float(abs(simplex_moment - scale * coarse)),
        torus_residual=float(abs(torus - simplex_cumulant)),
        quadrature_error=error,
        tolerance=max(10.0 * error, 1e-9 * max(1.0, abs(simplex_cumulant))),
    )
    logger.debug(
        f"Torus rewriting n={n}: residual {report.torus_residual:.3g}, "
        f"tolerance {report.tolerance:.3g}"
    )
    return report


class CoefficientBoundReport(ResultRecord):
    order: int
    beta: float
    t: float
    coefficient: complex
    magnitude: float
    l1_norm: float
    assumption1_value: float
    bound: float
    passed: bool


def coefficient_bound_check(
    ens: GibbsEnsemble,
    basis: FockBasis,
    observable: LocalObservable,
    perturbation: LocalObservable,
    ps: PeriodizedSwitch,
    n: int,
    t: float = 0.0,
    controls: Optional[QuadratureControls] = None,
    weight_power: float = 1.0,
) -> CoefficientBoundReport:
    """
    |I^(n)| ≤ ‖h‖₁^n · ∫ (1 + |t|_β^p) Σ_X |cumulant|, with P the sum of all translates.
    """
    _check_order(n, MAX_EUCLIDEAN_ORDER)
    controls = controls or QuadratureControls()
    translates = [template.operator(basis) for template in perturbation.translates(basis.geometry)]
    P = translates[0]
    for operator in translates[1:]:
        P = P + operator
    O = observable.operator(basis)
    estimate = euclidean_estimate(ens, P, O, ps, n, t, controls, estimate_error=False)
    integrated = assumption1_integral(
        ens, basis, observable, perturbation, n, weight_power, controls
    )
    bound = ps.l1_norm**n * integrated.value
    magnitude = abs(estimate.value)
    report = CoefficientBoundReport(
        anchor=f"coefficient_bound:n={n}",
        order=n,
        beta=ens.beta,
        t=t,
        coefficient=estimate.value,
        magnitude=magnitude,
        l1_norm=ps.l1_norm,
        assumption1_value=integrated.value,
        bound=bound,
        passed=magnitude <= bound * (1.0 + 1e-9) + ROUNDING_FLOOR,
    )
    logger.info(f"Coefficient bound n={n}: |I| = {magnitude:.4g} <= {bound:.4g}: {report.passed}")
    return report


class KuboReport(ResultRecord):
    beta: float
    eta: float
    t: float
    real_time_side: complex
    euclidean_side: complex
    static_side: complex
    gap: float
    static_gap: float
    real_time_budget: float
    euclidean_error: float


def kubo_check(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    t: float,
    controls: Optional[PropagationControls] = None,
    ps: Optional[PeriodizedSwitch] = None,
) -> KuboReport:
    """
    First-order response coefficient three ways.

    real time: −i ∫_{−T}^{t} g(ηs) ⟨[τ_t(O), τ_s(P)]⟩ ds with the true switch;
    Euclidean: −∫₀^β g_{β,η}(t − is) ⟨γ_s(P); O⟩ ds;
    static: −g(ηt) ∫₀^β ⟨γ_s(P); O⟩ ds.
    """
    controls = controls or PropagationControls()
    ps = ps or periodize(driven.switch, ens.beta, driven.eta)
    real = duhamel_estimate(
        driven, ens, O, 1, t, replace(controls, source="true", periodized=None)
    )
    euclid = euclidean_estimate(ens, driven.perturbation, O, ps, 1, t, controls.quadrature)
    real_side = -1j * real.value
    euclidean_side = -euclid.value
    static_side = -driven.switch_value(t) * static_response(ens, driven.perturbation, O)
    report = KuboReport(
        anchor="kubo_response",
        beta=ens.beta,
        eta=driven.eta,
        t=t,
        real_time_side=real_side,
        euclidean_side=euclidean_side,
        static_side=static_side,
        gap=float(abs(real_side - euclidean_side)),
        static_gap=float(abs(real_side - static_side)),
        real_time_budget=real.budget,
        euclidean_error=euclid.quadrature_error,
    )
    logger.info(f"Kubo check at beta={ens.beta}, eta={driven.eta}: gap {report.gap:.4g}")
    return report


def kubo_sweep(
    driven: DrivenHamiltonian,
    betas: Sequence[float],
    mu: float,
    O: FockOperator,
    t: float,
    controls: Optional[PropagationControls] = None,
) -> Tuple[List[KuboReport], Optional[SlopeReport]]:
    """Kubo gaps across inverse temperatures with the log-log fit of gap against β."""
    reports = [
        kubo_check(driven, gibbs_state(driven.base, beta, mu), O, t, controls) for beta in betas
    ]
    fit = None
    try:
        fit = fit_loglog(
            [report.beta for report in reports],
            [report.gap for report in reports],
            "kubo_gap_vs_beta",
            anchor="kubo_gap_fit",
        )
    except DegenerateFit as e:
        logger.warning(f"Kubo gap fit skipped: {e}")
    return reports, fit


class LinearResponseRow(ResultRecord):
    epsilon: float
    value: complex
    response: complex
    residual: float


class LinearResponseReport(ResultRecord):
    beta: float
    eta: float
    t: float
    extrapolated_response: float
    real_time_side: complex
    euclidean_side: complex
    extrapolation_gap: float
    kubo_gap: float
    extrapolation_tolerance: float
    residual_slope: float
    residual_r_squared: float
    passed: bool


def linear_response_extrapolation(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    t: float,
    epsilons: Sequence[float],
    controls: Optional[PropagationControls] = None,
) -> Tuple[List[LinearResponseRow], LinearResponseReport]:
    """
    (Tr Oρ(t) − ⟨O⟩)/ε extrapolated linearly to ε = 0 under the true dynamics.

    The finite-ε states follow the true dynamics, whose ε-derivative at 0 is the
    real-time Kubo coefficient, so the residual Tr Oρ(t) − ⟨O⟩ − ε·(real-time response)
    is measured against that side and fitted against ε on a log-log scale; a slope
    near 2 is the quadratic remainder. extrapolation_gap compares the ε → 0 intercept
    with the Euclidean side instead, and should stay within kubo_gap plus
    extrapolation_tolerance, the largest first-order deviation max |residual|/|ε|.

    Raises:
        DegenerateFit: with fewer than two distinct ε
    """
    controls = replace(controls or PropagationControls(), source="true", periodized=None)
    kubo = kubo_check(driven, ens, O, t, controls)
    equilibrium = ens.expectation(O)
    rows: List[LinearResponseRow] = []
    for epsilon in epsilons:
        if epsilon == 0:
            raise ValueError("linear response extrapolation needs nonzero epsilon")
        state = evolve_gibbs(driven.with_epsilon(epsilon), ens, t, controls)
        value = state.expectation(O)
        rows.append(
            LinearResponseRow(
                anchor="linear_response_point",
                epsilon=epsilon,
                value=value,
                response=(value - equilibrium) / epsilon,
                residual=float(abs(value - equilibrium - epsilon * kubo.real_time_side)),
            )
        )

    line = fit_line(
        [row.epsilon for row in rows],
        [float(np.real(row.response)) for row in rows],
        "linear_response_vs_epsilon",
    )
    residual_fit = fit_loglog(
        [abs(row.epsilon) for row in rows],
        [row.residual for row in rows],
        "linear_response_residual_vs_epsilon",
    )
    tolerance = max(row.residual / abs(row.epsilon) for row in rows)
    gap = float(abs(line.intercept - kubo.euclidean_side))
    report = LinearResponseReport(
        anchor="linear_response_extrapolation",
        beta=ens.beta,
        eta=driven.eta,
        t=t,
        extrapolated_response=line.intercept,
        real_time_side=kubo.real_time_side,
        euclidean_side=kubo.euclidean_side,
        extrapolation_gap=gap,
        kubo_gap=kubo.gap,
        extrapolation_tolerance=tolerance,
        residual_slope=residual_fit.slope,
        residual_r_squared=residual_fit.r_squared,
        passed=gap <= kubo.gap + tolerance + ROUNDING_FLOOR,
    )
    logger.info(
        f"Linear response at beta={ens.beta}: extrapolated {line.intercept:.6g}, "
        f"Euclidean {kubo.euclidean_side:.6g}, residual slope {residual_fit.slope:.3g}"
    )
    return rows, report


class ExpansionRow(ResultRecord):
    beta: float
    eta: float
    epsilon: float
    t: float
    evolved: complex
    equilibrium: complex
    first_order: complex
    second_order: complex
    remainder: float


def main_expansion_check(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    t: float,
    epsilons: Sequence[float],
    controls: Optional[PropagationControls] = None,
) -> Tuple[List[ExpansionRow], Optional[SlopeReport]]:
    """
    |Tr Oρ̃(t) − ⟨O⟩ + ε I^(1) − (ε²/2) I^(2)| across ε, with its log-log slope.

    ρ̃ is the state driven by the periodized switch.
    """
    controls = controls or PropagationControls()
    ps = periodize(driven.switch, ens.beta, driven.eta)
    periodized_controls = replace(controls, source="periodized", periodized=ps)
    first = euclidean_estimate(ens, driven.perturbation, O, ps, 1, t, controls.quadrature).value
    second = euclidean_estimate(ens, driven.perturbation, O, ps, 2, t, controls.quadrature).value
    equilibrium = ens.expectation(O)

    rows: List[ExpansionRow] = []
    for epsilon in epsilons:
        evolved = evolve_gibbs(driven.with_epsilon(epsilon), ens, t, periodized_controls).expectation(O)
        first_term = -epsilon * first
        second_term = epsilon**2 / 2.0 * second
        rows.append(
            ExpansionRow(
                anchor="main_expansion_remainder",
                beta=ens.beta,
                eta=driven.eta,
                epsilon=epsilon,
                t=t,
                evolved=evolved,
                equilibrium=equilibrium,
                first_order=first_term,
                second_order=second_term,
                remainder=float(abs(evolved - equilibrium - first_term - second_term)),
            )
        )

    fit = None
    try:
        fit = fit_loglog(
            [abs(row.epsilon) for row in rows],
            [row.remainder for row in rows],
            "main_expansion_remainder_vs_epsilon",
            anchor="main_expansion_fit",
        )
    except DegenerateFit as e:
        logger.warning(f"Main expansion fit skipped: {e}")
    return rows, fit


class AdiabaticSweepRow(ResultRecord):
    index: int
    eta: float
    beta: float
    epsilon: float
    t: float
    beta_mismatch: float = 1.0
    driven_value: float = math.nan
    instantaneous_value: float = math.nan
    gap: float = math.nan
    periodized_value: float = math.nan
    periodized_gap: float = math.nan
    periodized_reference: float = math.nan
    periodized_reference_gap: float = math.nan
    imag_residue: float = math.nan
    status: str = "ok"
    message: str = ""


@dataclass(frozen=True)
class SweepPoint:
    """One independent sweep job; picklable so it can cross process boundaries."""

    index: int
    driven: DrivenHamiltonian
    observable: FockOperator
    mu: float
    t: float
    eta: float
    beta: float
    epsilon: float
    controls: PropagationControls
    beta_mismatch: float = 1.0


def run_sweep_point(point: SweepPoint) -> AdiabaticSweepRow:
    """
    Gaps between the driven states and the instantaneous Gibbs state at one grid point.

    Failures inside the numerics are recorded on the row instead of raised.
    """
    row = AdiabaticSweepRow(
        anchor="adiabatic_gap",
        index=point.index,
        eta=point.eta,
        beta=point.beta,
        epsilon=point.epsilon,
        t=point.t,
        beta_mismatch=point.beta_mismatch,
    )
    try:
        driven = point.driven.with_eta(point.eta).with_epsilon(point.epsilon)
        ens = gibbs_state(driven.base, point.beta, point.mu)
        ps = periodize(driven.switch, point.beta, point.eta)
        O = point.observable

        true_controls = replace(point.controls, source="true", periodized=None)
        periodized_controls = replace(point.controls, source="periodized", periodized=ps)
        driven_value = evolve_gibbs(driven, ens, point.t, true_controls).expectation(O)
        periodized_value = evolve_gibbs(driven, ens, point.t, periodized_controls).expectation(O)
        instantaneous = gibbs_state(
            driven.at(point.t), point.beta * point.beta_mismatch, point.mu
        ).expectation(O)
        reference = gibbs_state(
            driven.periodized_at(ps, point.t), point.beta, point.mu
        ).expectation(O)
    except WickbenchError as e:
        logger.warning(f"Sweep point {point.index} (eta={point.eta}, beta={point.beta}) failed: {e}")
        return row.model_copy(update={"status": "failed", "message": f"{type(e).__name__}: {e}"})

    values = (driven_value, periodized_value, instantaneous, reference)
    residue = max(abs(np.imag(value)) for value in values)
    if residue > IMAG_RESIDUE_TOL:
        logger.warning(f"Sweep point {point.index}: imaginary residue {residue:.3g}")
    result = row.model_copy(
        update={
            "driven_value": float(np.real(driven_value)),
            "instantaneous_value": float(np.real(instantaneous)),
            "gap": float(abs(driven_value - instantaneous)),
            "periodized_value": float(np.real(periodized_value)),
            "periodized_gap": float(abs(periodized_value - instantaneous)),
            "periodized_reference": float(np.real(reference)),
            "periodized_reference_gap": float(abs(periodized_value - reference)),
            "imag_residue": float(residue),
        }
    )
    logger.info(
        f"Sweep point {point.index} (eta={point.eta}, beta={point.beta}, eps={point.epsilon}): "
        f"gap {result.gap:.4g}, periodized gap {result.periodized_gap:.4g}"
    )
    return result


SweepJob = Callable[[SweepPoint], AdiabaticSweepRow]
Mapper = Callable[[SweepJob, Iterable[SweepPoint]], Iterable[AdiabaticSweepRow]]


def adiabatic_sweep(
    template: DrivenHamiltonian,
    O: FockOperator,
    mu: float,
    grid: Sequence[Tuple[float, ...]],
    t: float = 0.0,
    controls: Optional[PropagationControls] = None,
    mapper: Mapper = map,
    beta_mismatch: float = 1.0,
) -> List[AdiabaticSweepRow]:
    """
    One row per grid point, in grid order whatever the mapper.

    Grid points are (η, β, ε) or (η, β, ε, t, mismatch); the short form takes t and
    beta_mismatch from the arguments. The instantaneous Gibbs state is taken at
    β·mismatch; the default 1 compares at equal temperature.
    """
    controls = controls or PropagationControls()
    points = []
    for index, (eta, beta, epsilon, *rest) in enumerate(grid):
        point_t = rest[0] if rest else t
        mismatch = rest[1] if len(rest) > 1 else beta_mismatch
        points.append(
            SweepPoint(index, template, O, mu, point_t, eta, beta, epsilon, controls, mismatch)
        )
    rows = sorted(mapper(run_sweep_point, points), key=lambda row: row.index)
    failed = sum(row.status != "ok" for row in rows)
    if failed:
        logger.warning(f"Adiabatic sweep: {failed} of {len(rows)} points failed")
    return rows


def eta_slopes(
    rows: Sequence[AdiabaticSweepRow], column: str = "periodized_gap", label: str = "adiabatic"
) -> List[SlopeReport]:
    """Log-log fits of a gap column against η, one per (β, ε, mismatch) group."""
    groups: Dict[Tuple[float, float, float], List[AdiabaticSweepRow]] = {}
    for row in rows:
        if row.status == "ok":
            groups.setdefault((row.beta, row.epsilon, row.beta_mismatch), []).append(row)
    fits = []
    for (beta, epsilon, mismatch), members in sorted(groups.items()):
        try:
            fits.append(
                fit_loglog(
                    [row.eta for row in members],
                    [getattr(row, column) for row in members],
                    f"{label}:{column}_vs_eta:beta={beta:g}:epsilon={epsilon:g}:mismatch={mismatch:g}",
                    anchor=f"{label}_slope",
                )
            )
        except DegenerateFit as e:
            logger.debug(f"No eta fit for beta={beta}, epsilon={epsilon}: {e}")
    return fits


def improved_adiabatic_check(
    m: int,
    template: DrivenHamiltonian,
    O: FockOperator,
    mu: float,
    etas: Sequence[float],
    beta: float,
    epsilon: float,
    t: float = 0.0,
    controls: Optional[PropagationControls] = None,
    mapper: Mapper = map,
) -> Tuple[List[AdiabaticSweepRow], Optional[SlopeReport]]:
    """
    Periodized-state gap against η with a switch flat to order m at 0.

    m = 0 uses the exponential switch; m >= 1 uses flat_switch(m + 1), whose
    derivatives of order 1..m vanish at 0. The expected slope is about m + 1.
    """
    if m < 0:
        raise ValueError(f"flatness order must be non-negative, got {m}")
    switch = exponential_switch() if m == 0 else flat_switch(m + 1)
    rows = adiabatic_sweep(
        template.with_switch(switch),
        O,
        mu,
        [(eta, beta, epsilon) for eta in etas],
        t,
        controls,
        mapper,
    )
    fits = eta_slopes(rows, "periodized_gap", label=f"improved_adiabatic:m={m}")
    return rows, fits[0] if fits else None
