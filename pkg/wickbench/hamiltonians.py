# wickbench/hamiltonians.py
"""
Finite-range Hamiltonians, perturbations and local observables.

Key Components:
- QuadraticKernel / InteractionKernel: one-body and density-density kernels with range and bound
- build_quadratic / build_quartic / build_hamiltonian: second quantization on a FockBasis
- LocalObservable: translatable density, bond and identity templates with Fock and kernel forms
- DrivenHamiltonian: H + ε g(ηt) P with its switch
- one_body_gap, local_terms, local_term_norm_max: spectral and locality diagnostics
"""

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Dict, FrozenSet, List, Literal, Optional, Sequence, Tuple

import numpy as np

from wickbench.exceptions import (
    KernelNotHermitian,
    OperatorContractError,
    RangeViolation,
)
from wickbench.lattice_fock import (
    FockBasis,
    FockOperator,
    LatticeGeometry,
    SiteLike,
    bilinear_entries,
    identity,
    number_operator,
    torus_distance,
)

if TYPE_CHECKING:
    from wickbench.switch import PeriodizedSwitch, SwitchSpec

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12


def _check_range(
    geometry: LatticeGeometry, matrix: np.ndarray, range_: float, bound: Optional[float]
) -> None:
    rows, cols = np.nonzero(np.abs(matrix) > 0)
    for x, y in zip(rows, cols):
        if torus_distance(geometry, int(x), int(y)) > range_ + 1e-12:
            raise RangeViolation(
                f"entry ({x}, {y}) couples sites at distance "
                f"{torus_distance(geometry, int(x), int(y)):.4g} > range {range_}"
            )
    if bound is not None and np.max(np.abs(matrix), initial=0.0) > bound + 1e-12:
        raise RangeViolation(
            f"largest entry {np.max(np.abs(matrix)):.4g} exceeds bound {bound}"
        )


@dataclass(frozen=True, eq=False)
class QuadraticKernel:
    """One-body kernel H(x;y) over the sites of a geometry."""

    matrix: np.ndarray
    range: float = 1.0
    bound: Optional[float] = None

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def effective_bound(self) -> float:
        if self.bound is not None:
            return self.bound
        return float(np.max(np.abs(self.matrix), initial=0.0))

    def validate(self, geometry: LatticeGeometry) -> None:
        n = geometry.n_sites
        if self.matrix.shape != (n, n):
            raise RangeViolation(
                f"kernel shape {self.matrix.shape} does not match {n} sites"
            )
        defect = np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0)
        if defect > HERMITIAN_TOL:
            raise KernelNotHermitian(f"kernel Hermiticity defect {defect:.3g}")
        _check_range(geometry, self.matrix, self.range, self.bound)

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True, eq=False)
class InteractionKernel:
    """Density-density kernel v(x;y) with coupling λ."""

    matrix: np.ndarray
    range: float = 1.0
    bound: Optional[float] = None
    coupling: float = 0.0

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=float)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def validate(self, geometry: LatticeGeometry) -> None:
        n = geometry.n_sites
        if self.matrix.shape != (n, n):
            raise RangeViolation(
                f"interaction shape {self.matrix.shape} does not match {n} sites"
            )
        if np.max(np.abs(self.matrix - self.matrix.T), initial=0.0) > HERMITIAN_TOL:
            raise KernelNotHermitian("interaction kernel is not symmetric")
        _check_range(geometry, self.matrix, self.range, self.bound)


def _neighbor_pairs(geometry: LatticeGeometry) -> List[Tuple[int, int]]:
    """Unordered same-label pairs at torus distance one; wrapped duplicates collapse."""
    pairs = set()
    for x, y in itertools.combinations(range(geometry.n_sites), 2):
        if geometry.sites[x][-1] != geometry.sites[y][-1]:
            continue
        if abs(torus_distance(geometry, x, y) - 1.0) < 1e-12:
            pairs.add((x, y))
    return sorted(pairs)


def nearest_neighbor_kernel(
    geometry: LatticeGeometry,
    hopping: float = -1.0,
    onsite: float | Sequence[float] = 0.0,
    staggered: float = 0.0,
) -> QuadraticKernel:
    """
    Nearest-neighbor tight-binding kernel on the torus.

    Args:
        geometry: Lattice geometry
        hopping: Amplitude on each unordered nearest-neighbor bond (same label)
        onsite: Uniform on-site energy, or one value per site
        staggered: Adds staggered·(-1)^{sum of cell coordinates} on site

    Returns:
        QuadraticKernel with range 1 (range 0 when hopping vanishes)
    """
    n = geometry.n_sites
    matrix = np.zeros((n, n), dtype=complex)
    for x, y in _neighbor_pairs(geometry):
        matrix[x, y] = hopping
        matrix[y, x] = np.conj(hopping)
    onsite_values = np.broadcast_to(np.asarray(onsite, dtype=float), (n,))
    for x, site in enumerate(geometry.sites):
        sign = (-1) ** (sum(site[:-1]) % 2)
        matrix[x, x] += onsite_values[x] + staggered * sign
    return QuadraticKernel(matrix, range=1.0 if hopping != 0 else 0.0)


def interaction_kernel(
    geometry: LatticeGeometry,
    u: float = 0.0,
    onsite_u: float = 0.0,
    coupling: float = 0.0,
) -> InteractionKernel:
    """Nearest-neighbor density repulsion u plus same-cell inter-label repulsion onsite_u."""
    n = geometry.n_sites
    matrix = np.zeros((n, n))
    for x, y in itertools.combinations(range(n), 2):
        dist = torus_distance(geometry, x, y)
        if dist == 0.0:
            value = onsite_u
        elif abs(dist - 1.0) < 1e-12:
            value = u
        else:
            continue
        matrix[x, y] = matrix[y, x] = value
    return InteractionKernel(matrix, range=1.0, coupling=coupling)


def build_quadratic(basis: FockBasis, kernel: QuadraticKernel) -> FockOperator:
    """Σ_{x,y} H(x;y) a*_x a_y."""
    kernel.validate(basis.geometry)
    matrix = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    rows, cols = np.nonzero(kernel.matrix)
    for x, y in zip(rows, cols):
        r, c, signs = bilinear_entries(basis, int(x), int(y))
        np.add.at(matrix, (r, c), kernel.matrix[x, y] * signs)
    support = frozenset(int(k) for k in np.union1d(rows, cols))
    return FockOperator(matrix, support, True, True)


def build_quartic(basis: FockBasis, kernel: InteractionKernel) -> FockOperator:
    """Σ_{x,y} v(x;y) a*_x a*_y a_y a_x, which is diagonal: Σ_{x≠y} v(x;y) n_x n_y."""
    kernel.validate(basis.geometry)
    occ = basis.occupations.astype(float)
    offdiag = np.array(kernel.matrix, dtype=float)
    np.fill_diagonal(offdiag, 0.0)
    diagonal = np.einsum("ix,xy,iy->i", occ, offdiag, occ)
    rows, cols = np.nonzero(offdiag)
    support = frozenset(int(k) for k in np.union1d(rows, cols))
    return FockOperator(np.diag(diagonal.astype(complex)), support, True, True)


def build_hamiltonian(
    basis: FockBasis,
    kernel: QuadraticKernel,
    interaction: Optional[InteractionKernel] = None,
) -> FockOperator:
    """H^λ = H⁰ + λ V."""
    hamiltonian = build_quadratic(basis, kernel)
    if interaction is not None and interaction.coupling != 0.0:
        hamiltonian = hamiltonian + build_quartic(basis, interaction) * interaction.coupling
    return hamiltonian


def one_body_gap(kernel: QuadraticKernel, mu: float) -> float:
    """Distance from μ to the one-body spectrum."""
    return float(np.min(np.abs(kernel.spectrum() - mu)))


def local_terms(
    basis: FockBasis,
    kernel: QuadraticKernel,
    interaction: Optional[InteractionKernel] = None,
) -> Dict[FrozenSet[int], FockOperator]:
    """
    Decompose H^λ into terms H_X indexed by their support X.

    Each term collects the kernel entries on {x, y} (both orders), so every term is
    self-adjoint and diam(X) is bounded by the kernel range.
    """
    terms: Dict[FrozenSet[int], FockOperator] = {}
    n = basis.n_modes
    for x in range(n):
        for y in range(x, n):
            parts = []
            if kernel.matrix[x, y] != 0:
                parts.append(((x, y), kernel.matrix[x, y]))
                if x != y:
                    parts.append(((y, x), kernel.matrix[y, x]))
            if not parts:
                continue
            matrix = np.zeros((basis.dimension, basis.dimension), dtype=complex)
            for (a, b), amplitude in parts:
                r, c, signs = bilinear_entries(basis, a, b)
                np.add.at(matrix, (r, c), amplitude * signs)
            terms[frozenset({x, y})] = FockOperator(matrix, frozenset({x, y}), True, True)

    if interaction is not None and interaction.coupling != 0.0:
        occ = basis.occupations.astype(float)
        for x, y in itertools.combinations(range(n), 2):
            v = interaction.matrix[x, y]
            if v == 0:
                continue
            diag = 2.0 * interaction.coupling * v * occ[:, x] * occ[:, y]
            term = FockOperator(np.diag(diag.astype(complex)), frozenset({x, y}), True, True)
            key = frozenset({x, y})
            terms[key] = terms[key] + term if key in terms else term
    return terms


def local_term_norm_max(
    basis: FockBasis,
    kernel: QuadraticKernel,
    interaction: Optional[InteractionKernel] = None,
) -> float:
    """Largest Fock-space norm ‖H_X‖ over the local terms, next to the kernel-entry bound."""
    norms = [term.norm() for term in local_terms(basis, kernel, interaction).values()]
    value = max(norms, default=0.0)
    logger.debug(
        f"Local-term norm max {value:.4g} vs kernel entry bound {kernel.effective_bound:.4g}"
    )
    return value


ObservableKind = Literal["density", "bond", "current", "identity"]


@dataclass(frozen=True)
class LocalObservable:
    """
    Even quadratic observable template anchored at a site.

    density: a*_x a_x; bond: a*_x a_y + a*_y a_x; current: i(a*_x a_y - a*_y a_x);
    identity: amplitude times the identity (support empty).
    """

    kind: ObservableKind = "density"
    site: Tuple[int, ...] = (0,)
    partner: Optional[Tuple[int, ...]] = None
    amplitude: float = 1.0

    def modes(self, geometry: LatticeGeometry) -> Tuple[int, int]:
        x = geometry.index(self.site)
        if self.kind in ("bond", "current"):
            if self.partner is None:
                raise OperatorContractError(f"{self.kind} observable needs a partner site")
            return x, geometry.index(self.partner)
        return x, x

    def kernel(self, geometry: LatticeGeometry) -> np.ndarray:
        """One-body matrix O(x;y) with O = Σ O(x;y) a*_x a_y."""
        n = geometry.n_sites
        matrix = np.zeros((n, n), dtype=complex)
        if self.kind == "identity":
            return matrix
        x, y = self.modes(geometry)
        if self.kind == "density":
            matrix[x, x] = self.amplitude
        elif self.kind == "bond":
            matrix[x, y] += self.amplitude
            matrix[y, x] += self.amplitude
        else:
            matrix[x, y] += 1j * self.amplitude
            matrix[y, x] += -1j * self.amplitude
        return matrix

    def operator(self, basis: FockBasis) -> FockOperator:
        if self.kind == "identity":
            return identity(basis) * self.amplitude
        kernel = self.kernel(basis.geometry)
        matrix = np.zeros((basis.dimension, basis.dimension), dtype=complex)
        rows, cols = np.nonzero(kernel)
        for a, b in zip(rows, cols):
            r, c, signs = bilinear_entries(basis, int(a), int(b))
            np.add.at(matrix, (r, c), kernel[a, b] * signs)
        support = frozenset(int(k) for k in self.modes(basis.geometry))
        return FockOperator(matrix, support, True, True)

    def translated(self, geometry: LatticeGeometry, shift: Sequence[int]) -> "LocalObservable":
        def move(site: Optional[Tuple[int, ...]]) -> Optional[Tuple[int, ...]]:
            if site is None:
                return None
            return geometry.site(geometry.translate(site, shift))

        return replace(self, site=move(self.site), partner=move(self.partner))

    def translates(self, geometry: LatticeGeometry) -> List["LocalObservable"]:
        """All lattice translates, in cell order."""
        return [self.translated(geometry, shift) for shift in geometry.cell_shifts()]


def local_perturbation(basis: FockBasis, profile: Dict[SiteLike, float]) -> FockOperator:
    """Σ_x μ(x) a*_x a_x for a finitely supported profile."""
    geometry = basis.geometry
    n = geometry.n_sites
    kernel = np.zeros((n, n), dtype=complex)
    for site, value in profile.items():
        kernel[geometry.index(site), geometry.index(site)] += value
    return build_quadratic(basis, QuadraticKernel(kernel, range=0.0))


@dataclass(frozen=True, eq=False)
class DrivenHamiltonian:
    """H(ηt) = H + ε g(ηt) P."""

    base: FockOperator
    perturbation: FockOperator
    epsilon: float
    switch: "SwitchSpec"
    eta: float
    number: Optional[FockOperator] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        for name, op in (("base", self.base), ("perturbation", self.perturbation)):
            if not op.is_self_adjoint(1e-12):
                raise OperatorContractError(f"{name} operator is not self-adjoint")
            if not op.gauge_invariant:
                raise OperatorContractError(f"{name} operator does not commute with N")
        if self.number is not None:
            for name, op in (("base", self.base), ("perturbation", self.perturbation)):
                defect = np.max(np.abs(op.commutator(self.number).matrix), initial=0.0)
                if defect > 1e-12:
                    raise OperatorContractError(
                        f"{name} operator has [O, N] defect {defect:.3g}"
                    )

    @classmethod
    def on_basis(
        cls,
        basis: FockBasis,
        base: FockOperator,
        perturbation: FockOperator,
        epsilon: float,
        switch: "SwitchSpec",
        eta: float,
    ) -> "DrivenHamiltonian":
        return cls(base, perturbation, epsilon, switch, eta, number_operator(basis))

    def with_epsilon(self, epsilon: float) -> "DrivenHamiltonian":
        return replace(self, epsilon=epsilon)

    def with_eta(self, eta: float) -> "DrivenHamiltonian":
        return replace(self, eta=eta)

    def with_switch(self, switch: "SwitchSpec") -> "DrivenHamiltonian":
        return replace(self, switch=switch)

    def switch_value(self, t: float) -> float:
        from wickbench.switch import eval_switch

        return float(eval_switch(self.switch, self.eta * t))

    def at(self, t: float) -> FockOperator:
        """Instantaneous Hamiltonian H + ε g(ηt) P."""
        return self.base + self.perturbation * (self.epsilon * self.switch_value(t))

    def periodized_at(self, periodized: "PeriodizedSwitch", t: float) -> FockOperator:
        """Auxiliary Hamiltonian H + ε g_{β,η}(t) P."""
        from wickbench.switch import eval_periodized

        value = float(np.real(eval_periodized(periodized, t)))
        return self.base + self.perturbation * (self.epsilon * value)
