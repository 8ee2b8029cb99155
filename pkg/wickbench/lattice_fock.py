# wickbench/lattice_fock.py
"""
Torus geometry, Fock basis and fermionic operators in the Jordan-Wigner representation.

Key Components:
- LatticeGeometry: d-dimensional torus of side L with M internal labels
- FockBasis: lexicographic enumeration of occupation bitstrings
- FockOperator: immutable dense operator tagged with support, gauge invariance and parity
- annihilation / creation / number_operator: CAR-consistent builders

Mode k is the k-th site in the geometry's enumeration order and is the most
significant bit of a basis index, so index order is lexicographic order on bitstrings.
Every fermionic sign in the package comes from this module.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import FrozenSet, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from wickbench.exceptions import ModeCountExceeded, SiteOutOfRange

logger = logging.getLogger(__name__)

DEFAULT_MAX_MODES = 12

Site = Tuple[int, ...]
SiteLike = Union[int, Sequence[int]]


@dataclass(frozen=True)
class LatticeGeometry:
    """Torus Γ_L × S_M; a site is (coordinates..., label)."""

    d: int
    L: int
    M: int = 1

    def __post_init__(self) -> None:
        for name in ("d", "L", "M"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def n_sites(self) -> int:
        return self.M * self.L**self.d

    @cached_property
    def sites(self) -> Tuple[Site, ...]:
        cells = itertools.product(range(self.L), repeat=self.d)
        return tuple(
            tuple(cell) + (label,) for cell in cells for label in range(self.M)
        )

    def index(self, site: SiteLike) -> int:
        """Mode index of a site given as an index or as (coordinates..., label)."""
        if isinstance(site, (int, np.integer)):
            if not 0 <= site < self.n_sites:
                raise SiteOutOfRange(f"site index {site} outside 0..{self.n_sites - 1}")
            return int(site)
        coords = tuple(int(c) for c in site)
        if len(coords) == self.d:
            coords = coords + (0,)
        if len(coords) != self.d + 1:
            raise SiteOutOfRange(f"site {site!r} does not match dimension d={self.d}")
        *cell, label = coords
        if not all(0 <= c < self.L for c in cell) or not 0 <= label < self.M:
            raise SiteOutOfRange(f"site {site!r} outside the L={self.L}, M={self.M} torus")
        flat = 0
        for c in cell:
            flat = flat * self.L + c
        return flat * self.M + label

    def site(self, index: int) -> Site:
        return self.sites[self.index(index)]

    def translate(self, site: SiteLike, shift: Sequence[int]) -> int:
        """Index of the site moved by a cell shift; the internal label is kept."""
        *cell, label = self.site(self.index(site))
        moved = tuple((c + s) % self.L for c, s in zip(cell, shift))
        return self.index(moved + (label,))

    def cell_shifts(self) -> Iterable[Tuple[int, ...]]:
        return itertools.product(range(self.L), repeat=self.d)


def torus_distance(geometry: LatticeGeometry, x: SiteLike, y: SiteLike) -> float:
    """Euclidean distance on the torus between the cells of x and y; labels are ignored."""
    cx = np.array(geometry.site(geometry.index(x))[:-1])
    cy = np.array(geometry.site(geometry.index(y))[:-1])
    diff = np.abs(cx - cy) % geometry.L
    wrapped = np.minimum(diff, geometry.L - diff)
    return float(np.sqrt(np.sum(wrapped.astype(float) ** 2)))


def diameter(geometry: LatticeGeometry, modes: Iterable[int]) -> float:
    """Largest torus distance within a set of modes (0 for fewer than two)."""
    listed = sorted(modes)
    return max(
        (torus_distance(geometry, a, b) for a, b in itertools.combinations(listed, 2)),
        default=0.0,
    )


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation-number basis in lexicographic bitstring order."""

    geometry: LatticeGeometry
    n_modes: int

    @property
    def dimension(self) -> int:
        return 1 << self.n_modes

    @cached_property
    def occupations(self) -> np.ndarray:
        """Array of shape (dimension, n_modes); column k is the occupation of mode k."""
        indices = np.arange(self.dimension)[:, None]
        shifts = np.arange(self.n_modes - 1, -1, -1)[None, :]
        occ = ((indices >> shifts) & 1).astype(np.int8)
        occ.setflags(write=False)
        return occ

    @cached_property
    def particle_numbers(self) -> np.ndarray:
        numbers = self.occupations.sum(axis=1).astype(float)
        numbers.setflags(write=False)
        return numbers

    @cached_property
    def _preceding(self) -> np.ndarray:
        # occupied modes strictly before k, per basis state
        before = np.cumsum(self.occupations, axis=1) - self.occupations
        before.setflags(write=False)
        return before

    def bit(self, mode: int) -> int:
        return 1 << (self.n_modes - 1 - mode)

    def mode(self, site: SiteLike) -> int:
        return self.geometry.index(site)


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense operator on Fock space.

    even is True for operators with an even number of creation/annihilation factors,
    False for odd ones and None when the parity is mixed or unknown.
    """

    matrix: np.ndarray
    support: FrozenSet[int] = field(default_factory=frozenset)
    gauge_invariant: bool = False
    even: Optional[bool] = None

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "support", frozenset(self.support))

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "FockOperator":
        return FockOperator(
            self.matrix.conj().T, self.support, self.gauge_invariant, self.even
        )

    def with_matrix(self, matrix: np.ndarray) -> "FockOperator":
        """Same tags, new matrix; used for conjugations that keep the operator class."""
        return FockOperator(matrix, self.support, self.gauge_invariant, self.even)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        return FockOperator(
            self.matrix + other.matrix,
            self.support | other.support,
            self.gauge_invariant and other.gauge_invariant,
            self.even if self.even == other.even else None,
        )

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        return self + other * -1.0

    def __mul__(self, scalar: complex) -> "FockOperator":
        return FockOperator(
            self.matrix * scalar, self.support, self.gauge_invariant, self.even
        )

    __rmul__ = __mul__

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        parity = None
        if self.even is not None and other.even is not None:
            parity = self.even == other.even
        return FockOperator(
            self.matrix @ other.matrix,
            self.support | other.support,
            self.gauge_invariant and other.gauge_invariant,
            parity,
        )

    def commutator(self, other: "FockOperator") -> "FockOperator":
        return (self @ other) - (other @ self)

    def norm(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.matrix, 2))

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)


def mode_budget() -> int:
    """Mode budget from WICKBENCH_MAX_DIM (a Fock dimension), else the default."""
    from wickbench.config.loaders import max_modes_budget

    return max_modes_budget(DEFAULT_MAX_MODES)


def build_fock_basis(
    geometry: LatticeGeometry, max_modes: Optional[int] = None
) -> FockBasis:
    """
    Enumerate the Fock basis of a lattice.

    Args:
        geometry: Lattice geometry
        max_modes: Mode budget; defaults to the environment-configured budget

    Returns:
        FockBasis of dimension 2^{M L^d}

    Raises:
        ModeCountExceeded: if M L^d exceeds the budget
    """
    budget = mode_budget() if max_modes is None else max_modes
    if geometry.n_sites > budget:
        raise ModeCountExceeded(
            f"{geometry.n_sites} modes need a Fock dimension of 2^{geometry.n_sites}, "
            f"budget is {budget} modes (2^{budget}); raise WICKBENCH_MAX_DIM to allow more"
        )
    logger.debug(f"Fock basis for {geometry}: dimension {1 << geometry.n_sites}")
    return FockBasis(geometry=geometry, n_modes=geometry.n_sites)


def identity(basis: FockBasis) -> FockOperator:
    return FockOperator(np.eye(basis.dimension), frozenset(), True, True)


def annihilation(basis: FockBasis, x: SiteLike) -> FockOperator:
    """a_x with sign (-1)^{number of occupied modes preceding x}."""
    k = basis.mode(x)
    occ = basis.occupations
    sources = np.nonzero(occ[:, k])[0]
    targets = sources - basis.bit(k)
    signs = 1.0 - 2.0 * (basis._preceding[sources, k] % 2)
    matrix = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    matrix[targets, sources] = signs
    return FockOperator(matrix, frozenset({k}), False, False)


def creation(basis: FockBasis, x: SiteLike) -> FockOperator:
    return annihilation(basis, x).adjoint()


def bilinear_entries(
    basis: FockBasis, x: int, y: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Nonzero entries of a*_x a_y as (rows, cols, signs).

    Built directly from occupations so a one-body operator costs O(dimension) per
    kernel entry instead of two dense products.
    """
    occ = basis.occupations
    before = basis._preceding
    if x == y:
        sources = np.nonzero(occ[:, y])[0]
        return sources, sources, np.ones(sources.size)
    mask = (occ[:, y] == 1) & (occ[:, x] == 0)
    sources = np.nonzero(mask)[0]
    targets = sources - basis.bit(y) + basis.bit(x)
    removed_before_x = before[sources, x] - (1 if y < x else 0)
    parity = (before[sources, y] + removed_before_x) % 2
    return targets, sources, 1.0 - 2.0 * parity


def bilinear(basis: FockBasis, x: SiteLike, y: SiteLike) -> FockOperator:
    """a*_x a_y."""
    kx, ky = basis.mode(x), basis.mode(y)
    rows, cols, signs = bilinear_entries(basis, kx, ky)
    matrix = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    matrix[rows, cols] = signs
    return FockOperator(matrix, frozenset({kx, ky}), True, True)


def density(basis: FockBasis, x: SiteLike) -> FockOperator:
    """n_x = a*_x a_x."""
    k = basis.mode(x)
    return FockOperator(
        np.diag(basis.occupations[:, k].astype(complex)), frozenset({k}), True, True
    )


def number_operator(basis: FockBasis) -> FockOperator:
    return FockOperator(
        np.diag(basis.particle_numbers.astype(complex)),
        frozenset(range(basis.n_modes)),
        True,
        True,
    )


def random_local_operator(
    basis: FockBasis, rng: np.random.Generator, support_size: int = 2, terms: int = 4
) -> FockOperator:
    """
    Even operator with complex Gaussian coefficients on pair products of a_x, a*_x.

    The support is support_size distinct modes drawn from rng, so draws cover
    hopping, pairing and density terms alike.
    """
    modes = rng.choice(basis.n_modes, size=min(support_size, basis.n_modes), replace=False)
    letters = [annihilation(basis, int(k)) for k in modes]
    letters += [letter.adjoint() for letter in letters]
    result = identity(basis) * complex(rng.normal(), rng.normal())
    for _ in range(terms):
        i, j = (int(v) for v in rng.integers(0, len(letters), size=2))
        result = result + (letters[i] @ letters[j]) * complex(rng.normal(), rng.normal())
    return result


def sector_multiplicities(basis: FockBasis) -> dict:
    """Number of basis states per particle number; C(n_modes, n) for each n."""
    numbers, counts = np.unique(basis.particle_numbers.astype(int), return_counts=True)
    return {int(n): int(c) for n, c in zip(numbers, counts)}


def binomial_multiplicities(n_modes: int) -> dict:
    return {n: math.comb(n_modes, n) for n in range(n_modes + 1)}
