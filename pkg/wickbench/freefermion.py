# wickbench/freefermion.py
"""
Non-interacting two-point functions, ring-diagram cumulants, decay fits and the
integrated-cumulant bounds.

Key Components:
- TwoPointCache: eigendecomposition of h − μ with β
- two_point / two_point_matrix: g₂(t, x; t′, y) with its antiperiodic extension
- two_point_trace: the same function from Fock-space traces, for cross-checks
- ring_cumulant: connected correlations of quadratic observables by Wick's rule
- decay_fit / space_decay_fit: exponential fits of |g₂| in space-time distance
- assumption1_integral: weighted absolute cumulant integrated over [0, β)^n

For t > t′ the kernel is e^{−(t−t′)(h−μ)}/(1+e^{−β(h−μ)}); for t ≤ t′ it is
−e^{−(t−t′)(h−μ)}/(1+e^{β(h−μ)}), so the equal-time value is −⟨a*_y a_x⟩.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from wickbench.equilibrium import (
    GibbsEnsemble,
    TimedObservable,
    beta_seminorm,
    pair_correlation,
    time_ordered_cumulant,
)
from wickbench.exceptions import CumulantOrderExceeded, DegenerateFit, ObservableNotQuadratic
from wickbench.hamiltonians import LocalObservable, QuadraticKernel
from wickbench.lattice_fock import (
    FockBasis,
    LatticeGeometry,
    SiteLike,
    annihilation,
    creation,
    torus_distance,
)
from wickbench.quadrature import QuadratureControls, ordered_simplex_rule
from wickbench.realtime import fit_line
from wickbench.results import ResultRecord

logger = logging.getLogger(__name__)

MAX_RING_ITEMS = 6
DECAY_FLOOR = 1e-14

QuadraticItem = Union[np.ndarray, LocalObservable]


@dataclass(frozen=True, eq=False)
class TwoPointCache:
    """Eigendata of the one-body operator h − μ at inverse temperature β."""

    beta: float
    mu: float
    levels: np.ndarray
    vectors: np.ndarray
    diagonal: bool

    @property
    def n_modes(self) -> int:
        return self.levels.size


def build_two_point_cache(kernel: QuadraticKernel, beta: float, mu: float) -> TwoPointCache:
    """Diagonalize h − μ; a diagonal kernel keeps the identity eigenbasis exactly."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    matrix = np.asarray(kernel.matrix, dtype=complex)
    diagonal = not np.any(matrix - np.diag(np.diag(matrix)))
    if diagonal:
        levels = np.real(np.diag(matrix)) - mu
        vectors = np.eye(matrix.shape[0], dtype=complex)
    else:
        levels, vectors = np.linalg.eigh(matrix)
        levels = levels - mu
    levels.setflags(write=False)
    vectors.setflags(write=False)
    return TwoPointCache(beta, mu, levels, vectors, diagonal)


def _reduce(t: float, beta: float) -> Tuple[float, float]:
    """t mod β in [0, β) and the antiperiodic sign (−1)^{shifts}."""
    shifts = math.floor(t / beta)
    reduced = t - shifts * beta
    if reduced >= beta:
        reduced, shifts = 0.0, shifts + 1
    return reduced, -1.0 if shifts % 2 else 1.0


def _branch(cache: TwoPointCache, t: float, t_p: float) -> np.ndarray:
    """Diagonal of the g₂ kernel in the eigenbasis, including the antiperiodic sign."""
    beta, e = cache.beta, cache.levels
    tr, sign_t = _reduce(t, beta)
    tpr, sign_p = _reduce(t_p, beta)
    delta = tr - tpr
    if tr > tpr:
        values = np.exp(-delta * e - np.logaddexp(0.0, -beta * e))
    else:
        values = -np.exp(-delta * e - np.logaddexp(0.0, beta * e))
    return sign_t * sign_p * values


def two_point_matrix(cache: TwoPointCache, t: float, t_p: float) -> np.ndarray:
    """G[x, y] = g₂(t, x; t′, y) for all pairs of modes."""
    values = _branch(cache, t, t_p)
    if cache.diagonal:
        return np.diag(values.astype(complex))
    return (cache.vectors * values[None, :]) @ cache.vectors.conj().T


def two_point(cache: TwoPointCache, t: float, x: int, t_p: float, y: int) -> complex:
    """g₂(t, x; t′, y) = ⟨T γ_t(a_x) γ_{t′}(a*_y)⟩ in the quasi-free state."""
    values = _branch(cache, t, t_p)
    if cache.diagonal:
        return complex(values[x]) if x == y else 0.0 + 0.0j
    return complex(np.sum(cache.vectors[x, :] * values * cache.vectors[y, :].conj()))


def two_point_trace(ens: GibbsEnsemble, basis: FockBasis, t: float, x: int, t_p: float, y: int) -> complex:
    """
    g₂(t, x; t′, y) from Fock-space traces, for t, t′ in [0, β).

    Reference for two_point on the same model; the ensemble must be built from the
    quadratic Hamiltonian of the cache's kernel.
    """
    if not (0 <= t < ens.beta and 0 <= t_p < ens.beta):
        raise ValueError(f"trace oracle needs times in [0, beta), got {t}, {t_p}")
    A = ens.to_eigenbasis(annihilation(basis, x))
    B = ens.to_eigenbasis(creation(basis, y))
    if t > t_p:
        return pair_correlation(ens, A, B, t - t_p)
    return -pair_correlation(ens, B, A, t_p - t)


def quadratic_kernel_of(item: QuadraticItem, geometry: LatticeGeometry) -> Tuple[np.ndarray, float]:
    """
    One-body kernel O(x;y) and constant part of a quadratic observable.

    Raises:
        ObservableNotQuadratic: for anything but a kernel array or a LocalObservable
    """
    if isinstance(item, LocalObservable):
        if item.kind == "identity":
            return np.zeros((geometry.n_sites, geometry.n_sites), dtype=complex), item.amplitude
        return item.kernel(geometry), 0.0
    if isinstance(item, np.ndarray):
        if item.shape != (geometry.n_sites, geometry.n_sites):
            raise ObservableNotQuadratic(
                f"kernel shape {item.shape} does not match {geometry.n_sites} modes"
            )
        return item.astype(complex), 0.0
    raise ObservableNotQuadratic(
        f"{type(item).__name__} is not a quadratic observable; pass a kernel or template"
    )


def ring_cumulant(
    cache: TwoPointCache,
    geometry: LatticeGeometry,
    observables: Sequence[QuadraticItem],
    times: Sequence[float],
) -> complex:
    """
    ⟨T γ_{t1}(O1); ...; γ_{tm}(Om)⟩ for quadratic observables by Wick's rule.

    −Σ_π Tr(O_{π1} G_{π1 π2} O_{π2} ... O_{πm} G_{πm π1}) over permutations with
    π(1) = 1, where G_{ij}[y, x] = g₂(t_i, y; t_j, x). Constants only enter m = 1.

    Raises:
        ObservableNotQuadratic: if an item is not quadratic
        CumulantOrderExceeded: for more than six items
    """
    m = len(observables)
    if m != len(times):
        raise ValueError(f"{m} observables but {len(times)} times")
    if m > MAX_RING_ITEMS:
        raise CumulantOrderExceeded(f"ring sum over {m} items exceeds {MAX_RING_ITEMS}")
    if m == 0:
        return 0.0 + 0.0j
    parts = [quadratic_kernel_of(item, geometry) for item in observables]
    kernels = [kernel for kernel, _ in parts]
    propagators = {
        (i, j): two_point_matrix(cache, times[i], times[j]) for i in range(m) for j in range(m)
    }
    total = 0.0 + 0.0j
    for rest in itertools.permutations(range(1, m)):
        order = (0,) + rest
        product = np.eye(geometry.n_sites, dtype=complex)
        for k, i in enumerate(order):
            j = order[(k + 1) % m]
            product = product @ kernels[i] @ propagators[(i, j)]
        total += np.trace(product)
    constant = parts[0][1] if m == 1 else 0.0
    return complex(-total + constant)


class DecayFit(ResultRecord):
    """|g₂| ≈ C e^{−c·distance}."""

    prefactor: float
    rate: float
    r_squared: float
    points: int


def space_time_distance(
    geometry: LatticeGeometry, beta: float, t: float, x: SiteLike, t_p: float, y: SiteLike
) -> float:
    """‖x − y‖_L + |t − t′|_β."""
    return torus_distance(geometry, x, y) + beta_seminorm([t - t_p], beta)


def decay_fit(
    cache: TwoPointCache,
    geometry: LatticeGeometry,
    samples: Sequence[Tuple[float, int, float, int]],
    anchor: str = "two_point_decay",
) -> DecayFit:
    """
    Least-squares fit of log|g₂(t, x; t′, y)| against ‖x − y‖_L + |t − t′|_β.

    Samples below 1e-14 are dropped.

    Raises:
        DegenerateFit: if no sample is above 1e-14 or all distances coincide
    """
    distances, logs = [], []
    for t, x, t_p, y in samples:
        value = abs(two_point(cache, t, x, t_p, y))
        if value > DECAY_FLOOR:
            distances.append(space_time_distance(geometry, cache.beta, t, x, t_p, y))
            logs.append(math.log(value))
    if not logs:
        raise DegenerateFit(f"all {len(samples)} two-point samples are below {DECAY_FLOOR}")
    fit = fit_line(distances, logs, label=anchor, anchor=anchor)
    logger.debug(f"Decay fit: C={math.exp(fit.intercept):.4g}, c={-fit.slope:.4g}, R2={fit.r_squared:.4f}")
    return DecayFit(
        anchor=anchor,
        prefactor=math.exp(fit.intercept),
        rate=-fit.slope,
        r_squared=fit.r_squared,
        points=fit.points,
    )


def space_decay_fit(
    cache: TwoPointCache,
    geometry: LatticeGeometry,
    origin: SiteLike = 0,
    t: float = 0.0,
    t_p: float = 0.0,
) -> DecayFit:
    """decay_fit over all sites y at fixed times, from a fixed origin."""
    x = geometry.index(origin)
    samples = [(t, x, t_p, y) for y in range(geometry.n_sites)]
    return decay_fit(cache, geometry, samples, anchor="two_point_space_decay")


class Assumption1Result(ResultRecord):
    n: int
    weight_power: float
    beta: float
    path: str
    value: float
    implied_constant: float
    nodes: int


def _integrate_orderings(
    n: int,
    beta: float,
    weight_power: float,
    controls: QuadratureControls,
    integrand: Callable[[np.ndarray], float],
) -> Tuple[float, int]:
    """Σ over the n! orderings of [0, β)^n of simplex integrals of (1 + |t|_β^p)·integrand."""
    nodes, weights = ordered_simplex_rule(n, beta, controls)
    total, count = 0.0, 0
    for ordering in itertools.permutations(range(n)):
        for row, weight in zip(nodes, weights):
            times = np.empty(n)
            times[list(ordering)] = row
            factor = 1.0 + beta_seminorm(times, beta) ** weight_power
            total += weight * factor * integrand(times)
            count += 1
    return total, count


def assumption1_integral(
    source: Union[GibbsEnsemble, TwoPointCache],
    basis: FockBasis,
    observable: LocalObservable,
    perturbation: LocalObservable,
    n: int,
    weight_power: float = 1.0,
    controls: Optional[QuadratureControls] = None,
    max_order: int = 4,
) -> Assumption1Result:
    """
    ∫_{[0,β)^n} (1 + |t|_β^p) Σ_{X_1..X_n} |⟨T γ_{t1}(P_{X1}); ...; γ_{tn}(P_{Xn}); O⟩| dt.

    The X_i run over all lattice translates of the perturbation template. A
    GibbsEnsemble gives exact traces (any interaction); a TwoPointCache gives ring
    diagrams (free fermions). The implied constant is (value/n!)^{1/n}.

    Raises:
        QuadratureBudgetExceeded: if the quadrature exceeds its node budget
    """
    if not 1 <= n <= 3:
        raise ValueError(f"integrated cumulants are certified for 1 <= n <= 3, got {n}")
    controls = controls or QuadratureControls()
    geometry = basis.geometry
    translates = perturbation.translates(geometry)
    tuples = list(itertools.product(range(len(translates)), repeat=n))
    path: Literal["exact", "ring"]

    if isinstance(source, GibbsEnsemble):
        path, beta = "exact", source.beta
        # keep operator objects alive so the ensemble's eigenbasis cache hits
        target = observable.operator(basis)
        moved = [template.operator(basis) for template in translates]

        def integrand(times: np.ndarray) -> float:
            total = 0.0
            for choice in tuples:
                items = [TimedObservable(moved[c], s) for c, s in zip(choice, times)]
                items.append(TimedObservable(target, 0.0))
                total += abs(time_ordered_cumulant(source, items, max_order))
            return total

    else:
        path, beta = "ring", source.beta

        def integrand(times: np.ndarray) -> float:
            total = 0.0
            all_times = list(times) + [0.0]
            for choice in tuples:
                items = [translates[c] for c in choice] + [observable]
                total += abs(ring_cumulant(source, geometry, items, all_times))
            return total

    value, count = _integrate_orderings(n, beta, weight_power, controls, integrand)
    implied = (value / math.factorial(n)) ** (1.0 / n) if value > 0 else 0.0
    logger.info(
        f"Integrated cumulant n={n}, p={weight_power}, beta={beta} ({path}): "
        f"{value:.6g}, implied constant {implied:.4g}"
    )
    return Assumption1Result(
        anchor=f"assumption1_integral:n={n}",
        n=n,
        weight_power=weight_power,
        beta=beta,
        path=path,
        value=float(value),
        implied_constant=float(implied),
        nodes=count,
    )
