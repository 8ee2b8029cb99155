# wickbench/equilibrium.py
"""
Grand-canonical Gibbs states, Euclidean evolution and time-ordered cumulants.

Key Components:
- GibbsEnsemble: eigendecomposition of K = H − μN with β, μ and log Z
- gibbs_state: overflow-safe construction from a Hamiltonian
- euclidean_evolve / heisenberg_evolve: γ_t and τ_t through the stored eigenbasis
- kms_residual: relative KMS defect for a pair of observables
- time_ordered_expectation / time_ordered_cumulant: β-periodic time ordering of even
  operators and partition inversion
- instantaneous_gibbs_expectation: ⟨O⟩ in the Gibbs state of H(ηt), directly or as a
  cumulant series

All products are evaluated in the eigenbasis of K with energies shifted by the ground
value, so every Boltzmann factor that appears has a non-positive exponent.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np

from wickbench.exceptions import (
    CumulantOrderExceeded,
    EigenFailure,
    OddOperatorUnsupported,
    OperatorContractError,
    OverflowRisk,
    SeriesDivergenceSuspected,
)
from wickbench.hamiltonians import DrivenHamiltonian
from wickbench.lattice_fock import FockOperator
from wickbench.quadrature import QuadratureControls, ordered_simplex_rule

logger = logging.getLogger(__name__)

DEFAULT_EXPONENT_BUDGET = 700.0
DEFAULT_MAX_CUMULANT_ORDER = 4


def particle_numbers(dimension: int) -> np.ndarray:
    """Particle number of each basis index (popcount) in the bitstring ordering."""
    n_modes = int(round(math.log2(dimension)))
    if 1 << n_modes != dimension:
        raise OperatorContractError(f"dimension {dimension} is not a power of two")
    indices = np.arange(dimension)[:, None]
    return ((indices >> np.arange(n_modes)[None, :]) & 1).sum(axis=1).astype(float)


@dataclass(frozen=True, eq=False)
class GibbsEnsemble:
    """Gibbs state e^{-βK}/Z stored through the eigendecomposition of K = H − μN."""

    beta: float
    mu: float
    energies: np.ndarray
    vectors: np.ndarray
    log_partition: float
    exponent_budget: float = DEFAULT_EXPONENT_BUDGET
    _transformed: Dict[int, Tuple[FockOperator, np.ndarray]] = field(
        default_factory=dict, init=False, repr=False
    )

    @property
    def dimension(self) -> int:
        return self.energies.size

    @property
    def shifted(self) -> np.ndarray:
        """K eigenvalues minus the smallest one (all >= 0)."""
        return self.energies - self.energies[0]

    @property
    def spread(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def weights(self) -> np.ndarray:
        boltzmann = np.exp(-self.beta * self.shifted)
        return boltzmann / boltzmann.sum()

    def to_eigenbasis(self, op: FockOperator) -> np.ndarray:
        """V* O V, cached per operator object."""
        key = id(op)
        cached = self._transformed.get(key)
        if cached is None or cached[0] is not op:
            matrix = self.vectors.conj().T @ op.matrix @ self.vectors
            matrix.setflags(write=False)
            self._transformed[key] = (op, matrix)
            return matrix
        return cached[1]

    def from_eigenbasis(self, matrix: np.ndarray) -> np.ndarray:
        return self.vectors @ matrix @ self.vectors.conj().T

    def density_matrix(self) -> np.ndarray:
        return (self.vectors * self.weights[None, :]) @ self.vectors.conj().T

    def expectation(self, op: FockOperator) -> complex:
        return complex(np.dot(self.weights, np.diag(self.to_eigenbasis(op))))

    def ground_projector(self, tol: float = 1e-10) -> np.ndarray:
        """Projector on the lowest K-eigenspace divided by its degeneracy."""
        ground = self.shifted <= tol
        block = self.vectors[:, ground]
        return block @ block.conj().T / int(ground.sum())

    def check_budget(self, exponent: float) -> None:
        if abs(exponent) * self.spread > self.exponent_budget:
            raise OverflowRisk(
                f"exponent {abs(exponent) * self.spread:.4g} exceeds budget "
                f"{self.exponent_budget} (|t| = {abs(exponent):.4g}, spread {self.spread:.4g})"
            )


def gibbs_state(
    H: FockOperator,
    beta: float,
    mu: float,
    exponent_budget: float = DEFAULT_EXPONENT_BUDGET,
) -> GibbsEnsemble:
    """
    Diagonalize K = H − μN and build the Gibbs ensemble.

    Args:
        H: Self-adjoint, number-conserving Hamiltonian
        beta: Inverse temperature (> 0)
        mu: Chemical potential
        exponent_budget: Bound on |t|·spread(K) for imaginary-time exponentials

    Raises:
        OperatorContractError: if H is not self-adjoint or not gauge invariant
        EigenFailure: if the eigendecomposition fails or is not finite
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if not H.gauge_invariant:
        raise OperatorContractError("Gibbs state needs a Hamiltonian commuting with N")
    if not H.is_self_adjoint(1e-12):
        raise OperatorContractError("Gibbs state needs a self-adjoint Hamiltonian")

    k_matrix = H.matrix - mu * np.diag(particle_numbers(H.dimension))
    try:
        energies, vectors = np.linalg.eigh(k_matrix)
    except np.linalg.LinAlgError as e:
        raise EigenFailure(f"eigendecomposition of K failed: {e}") from e
    if not (np.all(np.isfinite(energies)) and np.all(np.isfinite(vectors))):
        raise EigenFailure("eigendecomposition of K produced non-finite values")

    shifted = energies - energies[0]
    log_partition = float(-beta * energies[0] + np.log(np.sum(np.exp(-beta * shifted))))
    energies.setflags(write=False)
    vectors.setflags(write=False)
    logger.debug(
        f"Gibbs state beta={beta}, mu={mu}: dim {energies.size}, "
        f"spread {shifted[-1]:.4g}, log Z {log_partition:.6g}"
    )
    return GibbsEnsemble(beta, mu, energies, vectors, log_partition, exponent_budget)


def _all_modes(op: FockOperator) -> frozenset:
    return frozenset(range(int(round(math.log2(op.dimension)))))


def euclidean_evolve(ens: GibbsEnsemble, O: FockOperator, t: float) -> FockOperator:
    """
    γ_t(O) = e^{tK} O e^{−tK}.

    Raises:
        OverflowRisk: if |t|·spread(K) exceeds the exponent budget
    """
    ens.check_budget(t)
    if t == 0:
        return O
    factors = np.exp(t * np.subtract.outer(ens.energies, ens.energies))
    evolved = ens.from_eigenbasis(ens.to_eigenbasis(O) * factors)
    return FockOperator(evolved, _all_modes(O), O.gauge_invariant, O.even)


def heisenberg_evolve(ens: GibbsEnsemble, O: FockOperator, t: float) -> FockOperator:
    """τ_t(O) = e^{itH} O e^{−itH} for gauge-invariant O, computed with K."""
    if not O.gauge_invariant:
        raise OperatorContractError("real-time evolution through K needs a gauge-invariant O")
    if t == 0:
        return O
    phases = np.exp(1j * t * np.subtract.outer(ens.energies, ens.energies))
    evolved = ens.from_eigenbasis(ens.to_eigenbasis(O) * phases)
    return FockOperator(evolved, _all_modes(O), True, O.even)


def pair_correlation(ens: GibbsEnsemble, A: np.ndarray, B: np.ndarray, tau: float) -> complex:
    """⟨γ_τ(A) B⟩ for eigenbasis matrices A, B (τ may exceed β within budget)."""
    ens.check_budget(tau)
    shifted = ens.shifted
    exponent = -ens.beta * shifted[:, None] + tau * np.subtract.outer(shifted, shifted)
    partition = np.sum(np.exp(-ens.beta * shifted))
    return complex(np.sum(np.exp(exponent) * A * B.T) / partition)


def kms_residual(
    ens: GibbsEnsemble, O1: FockOperator, O2: FockOperator, t1: float, t2: float
) -> float:
    """|⟨γ_{t1}(O1)γ_{t2}(O2)⟩ − ⟨γ_{t2+β}(O2)γ_{t1}(O1)⟩| / (1 + |⟨γ_{t1}(O1)γ_{t2}(O2)⟩|)."""
    A, B = ens.to_eigenbasis(O1), ens.to_eigenbasis(O2)
    left = pair_correlation(ens, A, B, t1 - t2)
    right = pair_correlation(ens, B, A, t2 + ens.beta - t1)
    return float(abs(left - right) / (1.0 + abs(left)))


def gibbs_invariance_residual(ens: GibbsEnsemble, O: FockOperator, t: float) -> float:
    """|⟨τ_t(O)⟩ − ⟨O⟩| for gauge-invariant O."""
    return float(abs(ens.expectation(heisenberg_evolve(ens, O, t)) - ens.expectation(O)))


@dataclass(frozen=True, eq=False)
class TimedObservable:
    """An operator at imaginary time t."""

    operator: FockOperator
    time: float


def _check_even(items: Sequence[TimedObservable], even_flags: Optional[Sequence[bool]]) -> None:
    for index, item in enumerate(items):
        even = item.operator.even if even_flags is None else even_flags[index]
        if even is not True:
            raise OddOperatorUnsupported(
                f"item {index} is not an even operator; time ordering of odd "
                "operators is not supported"
            )


def _ordered_trace(ens: GibbsEnsemble, matrices: Sequence[np.ndarray], taus: np.ndarray) -> complex:
    """Tr[e^{−(β−τ1)K} O1 e^{−(τ1−τ2)K} O2 ... On e^{−τn K}] / Z for β > τ1 ≥ ... ≥ τn ≥ 0."""
    shifted = ens.shifted
    beta = ens.beta
    partition = np.sum(np.exp(-beta * shifted))
    product = np.exp(-(beta - taus[0]) * shifted)[:, None] * matrices[0]
    for k in range(1, len(matrices)):
        product = (product * np.exp(-(taus[k - 1] - taus[k]) * shifted)[None, :]) @ matrices[k]
    return complex(np.sum(np.diag(product) * np.exp(-taus[-1] * shifted)) / partition)


def time_ordered_expectation(
    ens: GibbsEnsemble,
    items: Sequence[TimedObservable],
    even_flags: Optional[Sequence[bool]] = None,
) -> complex:
    """
    ⟨T γ_{t1}(O1) ... γ_{tn}(On)⟩ for even operators.

    Times are reduced to [0, β) (period β, sign +1) and sorted in decreasing order;
    equal reduced times keep their given order.

    Raises:
        OddOperatorUnsupported: if any operator is not even
    """
    _check_even(items, even_flags)
    if not items:
        return 1.0 + 0.0j
    reduced = np.mod(np.array([item.time for item in items], dtype=float), ens.beta)
    reduced[reduced >= ens.beta] = 0.0
    order = sorted(range(len(items)), key=lambda k: -reduced[k])
    matrices = [ens.to_eigenbasis(items[k].operator) for k in order]
    return _ordered_trace(ens, matrices, reduced[order])


def set_partitions(elements: Sequence[int]) -> Iterator[List[Tuple[int, ...]]]:
    """All set partitions of elements; blocks keep the input order."""
    if not elements:
        yield []
        return
    first, rest = elements[0], list(elements[1:])
    for partition in set_partitions(rest):
        yield [(first,)] + partition
        for index, block in enumerate(partition):
            yield partition[:index] + [(first,) + block] + partition[index + 1 :]


def time_ordered_cumulant(
    ens: GibbsEnsemble,
    items: Sequence[TimedObservable],
    max_order: int = DEFAULT_MAX_CUMULANT_ORDER,
) -> complex:
    """
    ⟨T γ_{t1}(O1); ...; γ_{tn}(On)⟩ by partition inversion.

    Σ_P (−1)^{|P|−1} (|P|−1)! Π_{J∈P} ⟨T Π_{j∈J} γ_{tj}(Oj)⟩

    Raises:
        CumulantOrderExceeded: if len(items) > max_order
        OddOperatorUnsupported: if any operator is not even
    """
    n = len(items)
    if n > max_order:
        raise CumulantOrderExceeded(f"cumulant of {n} items exceeds cap {max_order}")
    _check_even(items, None)
    # block moments are shared between partitions
    memo: Dict[Tuple[int, ...], complex] = {}
    total = 0.0 + 0.0j
    for partition in set_partitions(list(range(n))):
        blocks = len(partition)
        term: complex = (-1) ** (blocks - 1) * math.factorial(blocks - 1)
        for block in partition:
            if block not in memo:
                memo[block] = time_ordered_expectation(ens, [items[k] for k in block])
            term = term * memo[block]
        total += term
    return complex(total)


def moments_from_cumulants(
    ens: GibbsEnsemble,
    items: Sequence[TimedObservable],
    max_order: int = DEFAULT_MAX_CUMULANT_ORDER,
) -> complex:
    """Σ_P Π_{J∈P} cumulant(J); reconstructs the time-ordered moment."""
    total = 0.0 + 0.0j
    for partition in set_partitions(list(range(len(items)))):
        term = 1.0 + 0.0j
        for block in partition:
            term *= time_ordered_cumulant(ens, [items[k] for k in block], max_order)
        total += term
    return complex(total)


def beta_seminorm(times: Sequence[float], beta: float) -> float:
    """Σ_i min_m |t_i − mβ|."""
    reduced = np.mod(np.asarray(times, dtype=float), beta)
    return float(np.sum(np.minimum(reduced, beta - reduced)))


def cumulant_series_terms(
    ens: GibbsEnsemble,
    perturbation: FockOperator,
    O: FockOperator,
    n_max: int,
    controls: QuadratureControls,
    max_order: int = DEFAULT_MAX_CUMULANT_ORDER,
) -> List[complex]:
    """
    ∫_{Δ^n} ⟨T γ_{s1}(P); ...; γ_{sn}(P); O⟩ ds for n = 1..n_max.

    Equals (1/n!) ∫_{[0,β)^n} of the same cumulant.
    """
    integrals = []
    for n in range(1, n_max + 1):
        nodes, weights = ordered_simplex_rule(n, ens.beta, controls)
        total = 0.0 + 0.0j
        for row, weight in zip(nodes, weights):
            items = [TimedObservable(perturbation, s) for s in row]
            items.append(TimedObservable(O, 0.0))
            total += weight * time_ordered_cumulant(ens, items, max_order)
        integrals.append(complex(total))
    return integrals


def _check_divergence(terms: Sequence[complex]) -> None:
    growth = 0
    for previous, current in zip(terms, terms[1:]):
        growth = growth + 1 if abs(current) > abs(previous) else 0
        if growth >= 3:
            raise SeriesDivergenceSuspected(
                f"cumulant series terms grew for 3 consecutive orders: "
                f"{[abs(term) for term in terms]}"
            )


def instantaneous_gibbs_expectation(
    driven: DrivenHamiltonian,
    beta: float,
    mu: float,
    O: FockOperator,
    t: float,
    mode: Literal["direct", "series"] = "direct",
    n_max: int = 2,
    controls: Optional[QuadratureControls] = None,
) -> complex:
    """
    ⟨O⟩_t in the Gibbs state of H(ηt) = H + ε g(ηt) P.

    direct diagonalizes H(ηt); series sums
    ⟨O⟩ + Σ_{n=1}^{n_max} (−ε g(ηt))^n ∫_{Δ^n} ⟨T γ(P); ...; γ(P); O⟩.

    Raises:
        SeriesDivergenceSuspected: if series terms grow for 3 consecutive orders
    """
    if mode == "direct":
        return gibbs_state(driven.at(t), beta, mu).expectation(O)
    if mode != "series":
        raise ValueError(f"unknown mode {mode!r}")

    ens = gibbs_state(driven.base, beta, mu)
    strength = -driven.epsilon * driven.switch_value(t)
    value = ens.expectation(O)
    if strength == 0.0:
        return value
    integrals = cumulant_series_terms(
        ens, driven.perturbation, O, n_max, controls or QuadratureControls()
    )
    terms = [strength**n * integral for n, integral in enumerate(integrals, start=1)]
    _check_divergence(terms)
    return complex(value + sum(terms))
