# wickbench/realtime.py
"""
Non-autonomous unitary propagation, evolved Gibbs states and real-time Duhamel
coefficients.

Key Components:
- PropagationControls: cutoff, step, unitarity tolerance and switch source
- propagate: commutator-free fourth-order scheme in the interaction picture
- evolve_gibbs: ρ(t) = U(t; −T) ρ_{β,μ} U(t; −T)*
- duhamel_coefficient_real: nested-commutator coefficients with node-doubling error
- lieb_robinson_probe: ‖[P_Y, U* O_X U]‖ against distance with exponential fits
- dynamics_gap: |Tr O(ρ(t) − ρ̃(t))| across inverse temperatures
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import polar
from scipy.stats import linregress

from wickbench.equilibrium import GibbsEnsemble, gibbs_state
from wickbench.exceptions import (
    DegenerateFit,
    OperatorContractError,
    QuadratureBudgetExceeded,
    UnitarityLost,
)
from wickbench.hamiltonians import DrivenHamiltonian
from wickbench.lattice_fock import FockBasis, FockOperator, torus_distance
from wickbench.quadrature import (
    QuadratureControls,
    gauss_legendre_panels,
    panel_edges,
    reference_rule,
)
from wickbench.results import ResultRecord
from wickbench.switch import (
    PeriodizedSwitch,
    default_cutoff,
    eval_periodized,
    eval_switch,
    periodize,
    periodized_cutoff,
    periodized_tail_integral,
    tail_integral,
)

logger = logging.getLogger(__name__)

SwitchSource = Literal["true", "periodized"]

# commutator-free fourth-order coefficients
_SQRT3 = math.sqrt(3.0)
CF4_NODES = (0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0)
CF4_ALPHA = ((3.0 - 2.0 * _SQRT3) / 12.0, (3.0 + 2.0 * _SQRT3) / 12.0)

WICK_CUTOFF_BETAS = 12.0
# complex entries held at once by the Duhamel recursion
_ELEMENT_BUDGET = 4_000_000


@dataclass(frozen=True)
class PropagationControls:
    """
    Controls for real-time propagation and real-time quadrature.

    t_start is the −T cutoff; None picks the certified default of the switch source.
    step None means min(0.05, 0.05/‖H‖).
    """

    t_start: Optional[float] = None
    t_end: float = 0.0
    step: Optional[float] = None
    order: int = 4
    unitarity_tol: float = 1e-9
    source: SwitchSource = "true"
    periodized: Optional[PeriodizedSwitch] = None
    reunitarize_every: int = 100
    estimate_error: bool = True
    quadrature: QuadratureControls = field(default_factory=QuadratureControls)

    def __post_init__(self) -> None:
        if self.step is not None and self.step <= 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.t_end > 0:
            raise ValueError(f"t_end must be <= 0, got {self.t_end}")
        if self.t_start is not None and self.t_start > self.t_end:
            raise ValueError(f"t_start {self.t_start} is after t_end {self.t_end}")
        if self.order != 4:
            raise ValueError(f"only the fourth-order scheme is available, got {self.order}")
        if self.source not in ("true", "periodized"):
            raise ValueError(f"unknown switch source {self.source!r}")
        if self.source == "periodized" and self.periodized is None:
            raise ValueError("periodized source needs a PeriodizedSwitch")

    def at(self, t_end: float) -> "PropagationControls":
        return replace(self, t_end=t_end)


def resolve_cutoff(driven: DrivenHamiltonian, controls: PropagationControls) -> float:
    """The −T start time: the certified tail cutoff of the selected switch unless set."""
    if controls.t_start is not None:
        return controls.t_start
    if controls.source == "periodized":
        return -periodized_cutoff(controls.periodized)
    return -default_cutoff(driven.switch, driven.eta)


def resolve_step(driven: DrivenHamiltonian, controls: PropagationControls) -> float:
    if controls.step is not None:
        return controls.step
    norm = driven.base.norm()
    return min(0.05, 0.05 / norm) if norm > 0 else 0.05


def switch_profile(
    driven: DrivenHamiltonian, controls: PropagationControls
) -> Callable[[np.ndarray], np.ndarray]:
    """Real time profile f(s): g(ηs) for the true source, g_{β,η}(s) for the periodized one."""
    if controls.source == "periodized":
        ps = controls.periodized

        def periodized_profile(s: np.ndarray) -> np.ndarray:
            return np.real(eval_periodized(ps, np.asarray(s, dtype=float)))

        return periodized_profile

    def true_profile(s: np.ndarray) -> np.ndarray:
        return np.asarray(eval_switch(driven.switch, driven.eta * np.asarray(s, dtype=float)))

    return true_profile


@dataclass(frozen=True, eq=False)
class HeisenbergFrame:
    """Eigenbasis of a time-independent generator; τ_t acts entrywise there."""

    energies: np.ndarray
    vectors: np.ndarray

    @classmethod
    def from_hamiltonian(cls, H: FockOperator) -> "HeisenbergFrame":
        energies, vectors = np.linalg.eigh(H.matrix)
        return cls(energies, vectors)

    @classmethod
    def from_ensemble(cls, ens: GibbsEnsemble) -> "HeisenbergFrame":
        return cls(np.asarray(ens.energies), np.asarray(ens.vectors))

    @property
    def frequencies(self) -> np.ndarray:
        return np.subtract.outer(self.energies, self.energies)

    def to_frame(self, matrix: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ matrix @ self.vectors

    def from_frame(self, matrix: np.ndarray) -> np.ndarray:
        return self.vectors @ matrix @ self.vectors.conj().T

    def evolve(self, framed: np.ndarray, t: float) -> np.ndarray:
        """τ_t of a matrix already expressed in the frame."""
        return framed * np.exp(1j * t * self.frequencies)


@dataclass(frozen=True, eq=False)
class Propagation:
    """U(t_end; t_start) with its diagnostics."""

    unitary: FockOperator
    t_start: float
    t_end: float
    step: float
    steps: int
    error_estimate: float
    unitarity_defect: float


def _hermitian_exp(matrix: np.ndarray, h: float) -> np.ndarray:
    """exp(−i h M) for Hermitian M."""
    values, vectors = np.linalg.eigh(matrix)
    return (vectors * np.exp(-1j * h * values)[None, :]) @ vectors.conj().T


def _unitarity_defect(U: np.ndarray) -> float:
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2))


def _project_unitary(U: np.ndarray, tol: float) -> np.ndarray:
    projected, _ = polar(U)
    defect = _unitarity_defect(projected)
    if not np.isfinite(defect) or defect > tol:
        raise UnitarityLost(f"‖U*U − 1‖ = {defect:.3g} after polar projection (tol {tol:.1g})")
    return projected


def _cf4_interaction(
    frame: HeisenbergFrame,
    perturbation: np.ndarray,
    strength: np.ndarray,
    t_start: float,
    h: float,
    steps: int,
    reunitarize_every: int,
    tol: float,
) -> np.ndarray:
    """U_I over `steps` steps; strength holds ε f at both nodes of every step."""
    omega = frame.frequencies
    U = np.eye(perturbation.shape[0], dtype=complex)
    for k in range(steps):
        t0 = t_start + k * h
        A1 = strength[k, 0] * perturbation * np.exp(1j * (t0 + CF4_NODES[0] * h) * omega)
        A2 = strength[k, 1] * perturbation * np.exp(1j * (t0 + CF4_NODES[1] * h) * omega)
        first = _hermitian_exp(CF4_ALPHA[1] * A1 + CF4_ALPHA[0] * A2, h)
        second = _hermitian_exp(CF4_ALPHA[0] * A1 + CF4_ALPHA[1] * A2, h)
        U = second @ (first @ U)
        if (k + 1) % reunitarize_every == 0:
            U = _project_unitary(U, tol)
    return _project_unitary(U, tol)


def _interaction_unitary(
    driven: DrivenHamiltonian,
    frame: HeisenbergFrame,
    profile: Callable[[np.ndarray], np.ndarray],
    t_start: float,
    t_end: float,
    steps: int,
    controls: PropagationControls,
) -> np.ndarray:
    h = (t_end - t_start) / steps
    starts = t_start + h * np.arange(steps)
    nodes = starts[:, None] + h * np.array(CF4_NODES)[None, :]
    strength = driven.epsilon * profile(nodes)
    perturbation = frame.to_frame(driven.perturbation.matrix)
    return _cf4_interaction(
        frame,
        perturbation,
        strength,
        t_start,
        h,
        steps,
        controls.reunitarize_every,
        controls.unitarity_tol,
    )


def propagate(
    driven: DrivenHamiltonian,
    controls: PropagationControls,
    frame: Optional[HeisenbergFrame] = None,
) -> Propagation:
    """
    Propagator U(t_end; t_start) of i∂_t U = H(t) U.

    The interaction-picture generator ε f(t) τ_t(P) is integrated with a fixed-step
    commutator-free fourth-order scheme, then U = e^{−iH t_end} U_I e^{iH t_start}.
    The attached error estimate is ‖U_h − U_{2h}‖/15.

    Raises:
        UnitarityLost: if ‖U*U − 1‖ exceeds the tolerance after polar projection
    """
    frame = frame or HeisenbergFrame.from_hamiltonian(driven.base)
    t_start = resolve_cutoff(driven, controls)
    t_end = controls.t_end
    span = t_end - t_start
    step = resolve_step(driven, controls)
    steps = max(1, math.ceil(span / step - 1e-12)) if span > 0 else 0
    dim = driven.base.dimension

    error = 0.0
    if steps == 0:
        U_I = np.eye(dim, dtype=complex)
    elif driven.epsilon == 0.0:
        U_I = np.eye(dim, dtype=complex)
    else:
        profile = switch_profile(driven, controls)
        U_I = _interaction_unitary(driven, frame, profile, t_start, t_end, steps, controls)
        if controls.estimate_error:
            coarse = _interaction_unitary(
                driven, frame, profile, t_start, t_end, max(1, steps // 2), controls
            )
            error = float(np.linalg.norm(U_I - coarse, 2)) / 15.0

    phases_end = np.exp(-1j * frame.energies * t_end)
    phases_start = np.exp(1j * frame.energies * t_start)
    U = frame.from_frame(phases_end[:, None] * U_I * phases_start[None, :])
    defect = _unitarity_defect(U)
    if defect > controls.unitarity_tol:
        U = _project_unitary(U, controls.unitarity_tol)
        defect = _unitarity_defect(U)

    logger.debug(
        f"Propagated [{t_start:.4g}, {t_end:.4g}] in {steps} steps of "
        f"{span / steps if steps else 0.0:.4g} ({controls.source} switch): "
        f"error {error:.3g}, unitarity defect {defect:.3g}"
    )
    support = driven.base.support | driven.perturbation.support
    return Propagation(
        unitary=FockOperator(U, support, True, True),
        t_start=t_start,
        t_end=t_end,
        step=span / steps if steps else 0.0,
        steps=steps,
        error_estimate=error,
        unitarity_defect=defect,
    )


@dataclass(frozen=True, eq=False)
class EvolvedState:
    """ρ(t) with its provenance."""

    density: np.ndarray
    time: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.density))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.density)[0])

    def expectation(self, O: FockOperator) -> complex:
        return complex(np.sum(O.matrix * self.density.T))


def evolve_gibbs(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    t: float,
    controls: PropagationControls,
    config_hash: Optional[str] = None,
) -> EvolvedState:
    """
    ρ(t) = U(t; −T) ρ_{β,μ} U(t; −T)*.

    Raises:
        UnitarityLost: propagated from propagate, or if trace or positivity drift
    """
    propagation = propagate(driven, controls.at(t))
    U = propagation.unitary.matrix
    rho = U @ ens.density_matrix() @ U.conj().T
    rho = (rho + rho.conj().T) / 2
    state = EvolvedState(
        density=rho,
        time=t,
        provenance={
            "t_start": propagation.t_start,
            "step": propagation.step,
            "steps": propagation.steps,
            "source": controls.source,
            "error_estimate": propagation.error_estimate,
            "config_hash": config_hash,
        },
    )
    if abs(state.trace - 1.0) > 1e-10:
        raise UnitarityLost(f"evolved state has trace {state.trace:.12g}")
    if state.min_eigenvalue < -1e-10:
        raise UnitarityLost(f"evolved state has eigenvalue {state.min_eigenvalue:.3g}")
    return state


@dataclass(frozen=True)
class DuhamelEstimate:
    """A real-time coefficient with its quadrature and truncation estimates."""

    order: int
    value: complex
    quadrature_error: float
    truncation_bound: float
    nodes: int

    @property
    def budget(self) -> float:
        return self.quadrature_error + self.truncation_bound


class _DuhamelRecursion:
    """
    σ_0 = ρ and σ_k(s) = ∫_{−T}^{s} f(r)[τ_r(P), σ_{k−1}(r)] dr in the K eigenbasis.

    Each σ_k is the panel prefix sum plus a Gauss-Legendre rule on the partial panel,
    so the n-th coefficient Tr(τ_t(O) σ_n(t)) costs about (grid nodes)·order^{n−1}
    commutators.
    """

    def __init__(
        self,
        frame: HeisenbergFrame,
        populations: np.ndarray,
        perturbation: np.ndarray,
        profile: Callable[[np.ndarray], np.ndarray],
        lower: float,
        upper: float,
        width: float,
        order: int,
    ) -> None:
        self.omega = frame.frequencies
        self.populations = populations
        self.perturbation = perturbation
        self.profile = profile
        self.dim = perturbation.shape[0]
        self.order = order
        self.x, self.w = reference_rule(order)
        self.nodes, self.weights = gauss_legendre_panels(lower, upper, width, order)
        self.edges = panel_edges(lower, upper, width)
        self.prefix: Dict[int, np.ndarray] = {}
        self.evaluations = 0

    @property
    def n_panels(self) -> int:
        return self.edges.size - 1

    def _terms(self, k: int, points: np.ndarray, previous: Optional[np.ndarray]) -> np.ndarray:
        """f(r)[τ_r(P), σ_{k−1}(r)] at each point."""
        B = self.perturbation[None, :, :] * np.exp(1j * points[:, None, None] * self.omega)
        if k == 1:
            p = self.populations
            commutator = B * (p[None, None, :] - p[None, :, None])
        else:
            commutator = B @ previous - previous @ B
        self.evaluations += points.size
        return self.profile(points)[:, None, None] * commutator

    def _chunk(self, k: int) -> int:
        return max(1, _ELEMENT_BUDGET // (self.order ** max(k - 1, 0) * self.dim**2))

    def sigma_at(self, k: int, points: np.ndarray) -> np.ndarray:
        """σ_k at arbitrary points of [lower, upper]."""
        prefix = self.prefix_sums(k)
        size = self._chunk(k)
        if points.size > size:
            return np.concatenate(
                [self.sigma_at(k, points[i : i + size]) for i in range(0, points.size, size)]
            )
        panel = np.clip(np.searchsorted(self.edges, points, side="right") - 1, 0, self.n_panels - 1)
        left = self.edges[panel]
        half = (points - left) / 2
        inner = (left[:, None] + half[:, None] * (self.x[None, :] + 1)).ravel()
        weights = half[:, None] * self.w[None, :]
        previous = None if k == 1 else self.sigma_at(k - 1, inner)
        terms = self._terms(k, inner, previous).reshape(points.size, self.order, self.dim, self.dim)
        return prefix[panel] + np.einsum("mq,mqab->mab", weights, terms)

    def prefix_sums(self, k: int) -> np.ndarray:
        """Cumulative panel integrals of the level-k integrand, shape (panels + 1, D, D)."""
        if k in self.prefix:
            return self.prefix[k]
        panel_sums = np.zeros((self.n_panels, self.dim, self.dim), dtype=complex)
        per_chunk = max(1, self._chunk(k) // self.order)
        for start in range(0, self.n_panels, per_chunk):
            stop = min(self.n_panels, start + per_chunk)
            points = self.nodes[start * self.order : stop * self.order]
            weights = self.weights[start * self.order : stop * self.order]
            previous = None if k == 1 else self.sigma_at(k - 1, points)
            terms = self._terms(k, points, previous) * weights[:, None, None]
            panel_sums[start:stop] = terms.reshape(stop - start, self.order, self.dim, self.dim).sum(axis=1)
        prefix = np.zeros((self.n_panels + 1, self.dim, self.dim), dtype=complex)
        np.cumsum(panel_sums, axis=0, out=prefix[1:])
        self.prefix[k] = prefix
        return prefix

    def coefficient(self, n: int, observable: np.ndarray) -> complex:
        """Tr(τ_upper(O) σ_n(upper)) with O in the frame, already evolved to upper."""
        sigma = self.prefix_sums(n)[-1]
        return complex(np.sum(observable * sigma.T))


def _real_time_width(driven: DrivenHamiltonian, controls: QuadratureControls) -> float:
    norm = driven.base.norm()
    return min(controls.panel_width, 1.0 / norm) if norm > 0 else controls.panel_width


def duhamel_truncation_bound(
    driven: DrivenHamiltonian,
    O: FockOperator,
    n: int,
    t: float,
    cutoff: float,
    controls: PropagationControls,
) -> float:
    """2^n ‖O‖ ‖P‖^n ∫_{−∞}^{−T}|f| (∫_{−∞}^{t}|f|)^{n−1}."""
    if controls.source == "periodized":
        tail = periodized_tail_integral(controls.periodized, cutoff)
        total = periodized_tail_integral(controls.periodized, -t)
    else:
        tail = tail_integral(driven.switch, driven.eta, cutoff)
        total = tail_integral(driven.switch, driven.eta, -t)
    return 2.0**n * O.norm() * driven.perturbation.norm() ** n * tail * total ** (n - 1)


def duhamel_estimate(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    n: int,
    t: float,
    controls: PropagationControls,
) -> DuhamelEstimate:
    """
    c_n = ∫_{−T ≤ s_n ≤ ... ≤ s_1 ≤ t} Π f(s_j) ⟨[...[τ_t(O), τ_{s1}(P)], ..., τ_{sn}(P)]⟩ ds.

    With this sign convention Tr Oρ(t) = ⟨O⟩ + Σ_n (−iε)^n c_n. The value is taken at
    half the panel width and the quadrature error is the difference to full width.

    Raises:
        QuadratureBudgetExceeded: if the node count exceeds the evaluation budget
        OperatorContractError: if O is not gauge invariant
    """
    if n < 1:
        raise ValueError(f"order must be at least 1, got {n}")
    if not O.gauge_invariant:
        raise OperatorContractError("Duhamel coefficients need a gauge-invariant observable")
    if t > 0:
        raise ValueError(f"t must be <= 0, got {t}")

    start = resolve_cutoff(driven, controls)
    cutoff = -start
    if start >= t:
        return DuhamelEstimate(n, 0.0 + 0.0j, 0.0, 0.0, 0)

    frame = HeisenbergFrame.from_ensemble(ens)
    perturbation = ens.to_eigenbasis(driven.perturbation)
    observable = frame.evolve(ens.to_eigenbasis(O), t)
    profile = switch_profile(driven, controls)
    quadrature = controls.quadrature
    width = _real_time_width(driven, quadrature)

    values = []
    nodes_used = 0
    for level_width in (width, width / 2):
        panels = math.ceil((t - start) / level_width - 1e-12)
        estimate = panels * quadrature.order**n
        if estimate > quadrature.max_evaluations:
            raise QuadratureBudgetExceeded(
                f"Duhamel coefficient of order {n} needs about {estimate:.3g} evaluations "
                f"(budget {quadrature.max_evaluations})"
            )
        recursion = _DuhamelRecursion(
            frame, ens.weights, perturbation, profile, start, t, level_width, quadrature.order
        )
        values.append(recursion.coefficient(n, observable))
        nodes_used += recursion.evaluations

    truncation = duhamel_truncation_bound(driven, O, n, t, cutoff, controls)
    result = DuhamelEstimate(
        order=n,
        value=values[1],
        quadrature_error=float(abs(values[1] - values[0])),
        truncation_bound=truncation,
        nodes=nodes_used,
    )
    logger.debug(
        f"Duhamel c_{n}(t={t}) = {result.value:.10g} over [{start:.4g}, {t:.4g}]: "
        f"quadrature {result.quadrature_error:.3g}, truncation {truncation:.3g}, "
        f"{nodes_used} commutators"
    )
    return result


def duhamel_coefficient_real(
    driven: DrivenHamiltonian,
    ens: GibbsEnsemble,
    O: FockOperator,
    n: int,
    t: float,
    controls: PropagationControls,
) -> complex:
    """Real-time Duhamel coefficient c_n; see duhamel_estimate."""
    return duhamel_estimate(driven, ens, O, n, t, controls).value


class SlopeReport(ResultRecord):
    """Least-squares line through (log x, log y) or (x, log y)."""

    label: str
    slope: float
    intercept: float
    r_squared: float
    points: int


def fit_line(x: Sequence[float], y: Sequence[float], label: str, anchor: str = "") -> SlopeReport:
    """
    Fit y against x.

    Raises:
        DegenerateFit: with fewer than two distinct finite abscissae
    """
    xs, ys = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[keep], ys[keep]
    if np.unique(xs).size < 2:
        raise DegenerateFit(f"{label}: need two distinct points, got {xs.size}")
    fit = linregress(xs, ys)
    return SlopeReport(
        anchor=anchor or label,
        label=label,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(fit.rvalue**2),
        points=int(xs.size),
    )


def fit_loglog(x: Sequence[float], y: Sequence[float], label: str, anchor: str = "") -> SlopeReport:
    """log-log fit; non-positive values are dropped."""
    xs, ys = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
    keep = (xs > 0) & (ys > 0)
    with np.errstate(divide="ignore"):
        return fit_line(np.log(xs[keep]), np.log(ys[keep]), label, anchor)


class LiebRobinsonRow(ResultRecord):
    t: float
    s: float
    distance: float
    norm: float
    bound: float


@dataclass
class LiebRobinsonReport:
    rows: List[LiebRobinsonRow]
    fits: List[SlopeReport]


def support_distance(basis: FockBasis, first: FockOperator, second: FockOperator) -> float:
    """Smallest torus distance between two supports (0 if they overlap)."""
    if not first.support or not second.support:
        return 0.0
    return min(
        torus_distance(basis.geometry, x, y) for x in first.support for y in second.support
    )


def lieb_robinson_probe(
    driven: DrivenHamiltonian,
    basis: FockBasis,
    O_X: FockOperator,
    probes: Sequence[FockOperator],
    times: Sequence[Tuple[float, float]],
    controls: Optional[PropagationControls] = None,
) -> LiebRobinsonReport:
    """
    ‖[P_Y, U(t;s)* O_X U(t;s)]‖ for every probe P_Y and every (t, s).

    For each |t − s| with at least two distinct distances, log-norm is fitted against
    distance; vanishing norms are left out of the fit.
    """
    controls = controls or PropagationControls()
    frame = HeisenbergFrame.from_hamiltonian(driven.base)
    rows: List[LiebRobinsonRow] = []
    for t, s in times:
        if t == s:
            U = np.eye(O_X.dimension, dtype=complex)
        else:
            U = propagate(driven, replace(controls, t_start=s, t_end=t), frame).unitary.matrix
        evolved = U.conj().T @ O_X.matrix @ U
        for probe in probes:
            commutator = probe.matrix @ evolved - evolved @ probe.matrix
            rows.append(
                LiebRobinsonRow(
                    anchor="lieb_robinson_commutator",
                    t=t,
                    s=s,
                    distance=support_distance(basis, O_X, probe),
                    norm=float(np.linalg.norm(commutator, 2)),
                    bound=2.0 * probe.norm() * O_X.norm(),
                )
            )

    fits: List[SlopeReport] = []
    for elapsed in sorted({round(abs(row.t - row.s), 12) for row in rows}):
        sample = [
            row for row in rows if round(abs(row.t - row.s), 12) == elapsed and row.norm > 1e-300
        ]
        try:
            fits.append(
                fit_line(
                    [row.distance for row in sample],
                    [math.log(row.norm) for row in sample],
                    label=f"lieb_robinson_decay:elapsed={elapsed:g}",
                    anchor="lieb_robinson_fit",
                )
            )
        except DegenerateFit:
            logger.debug(f"No Lieb-Robinson fit at elapsed time {elapsed:g}")
    return LiebRobinsonReport(rows=rows, fits=fits)


class DynamicsGapRow(ResultRecord):
    beta: float
    eta: float
    epsilon: float
    t: float
    true_value: complex
    periodized_value: complex
    gap: float


def dynamics_gap(
    driven: DrivenHamiltonian,
    betas: Sequence[float],
    mu: float,
    O: FockOperator,
    t: float,
    controls: Optional[PropagationControls] = None,
) -> Tuple[List[DynamicsGapRow], Optional[SlopeReport]]:
    """
    |Tr O(ρ(t) − ρ̃(t))| across inverse temperatures, with the log-log fit against β.

    Both dynamics start from the same Gibbs state at the longer of the two certified
    cutoffs.
    """
    controls = controls or PropagationControls()
    rows: List[DynamicsGapRow] = []
    for beta in betas:
        ens = gibbs_state(driven.base, beta, mu)
        ps = periodize(driven.switch, beta, driven.eta)
        start = controls.t_start
        if start is None:
            start = min(-default_cutoff(driven.switch, driven.eta), -periodized_cutoff(ps))
        true_state = evolve_gibbs(
            driven, ens, t, replace(controls, t_start=start, source="true", periodized=None)
        )
        periodized_state = evolve_gibbs(
            driven, ens, t, replace(controls, t_start=start, source="periodized", periodized=ps)
        )
        true_value = true_state.expectation(O)
        periodized_value = periodized_state.expectation(O)
        rows.append(
            DynamicsGapRow(
                anchor="dynamics_gap",
                beta=beta,
                eta=driven.eta,
                epsilon=driven.epsilon,
                t=t,
                true_value=true_value,
                periodized_value=periodized_value,
                gap=float(abs(true_value - periodized_value)),
            )
        )
        logger.info(f"Dynamics gap at beta={beta}: {rows[-1].gap:.4g}")

    fit = None
    try:
        fit = fit_loglog(
            [row.beta for row in rows],
            [row.gap for row in rows],
            "dynamics_gap_vs_beta",
            anchor="dynamics_gap_fit",
        )
    except DegenerateFit as e:
        logger.warning(f"Dynamics gap fit skipped: {e}")
    return rows, fit
