# wickbench/switch.py
"""
Switch functions as Laplace data and their β,η-periodic approximants.

A switch is g(t) = Σ_k w_k e^{ξ_k t} + ∫ h(ξ) e^{ξ t} dξ for t ≤ 0, stored as point
atoms plus an optional density sampled on a grid (trapezoidal rule). Periodizing moves
every frequency ηξ up to the next point of the lattice (2π/β)ℕ₊, which makes the
approximant g_{β,η} periodic under t → t − iβ.

Key Components:
- SwitchSpec / PeriodizedSwitch: immutable Laplace data and frequency coefficients
- exponential_switch, flat_switch, atom_switch, rational_switch, switch_from_descriptor
- eval_switch / eval_periodized / approximation_gap
- derivative diagnostics, tail integrals and the real-time cutoff
- RationalLaplace / inverse_laplace: Bromwich-line construction of h from g
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.optimize import brentq
from scipy.special import comb

from wickbench.exceptions import (
    ContourTruncationWarning,
    PositiveTimeUnsupported,
    SwitchAssumptionViolated,
)
from wickbench.quadrature import gauss_legendre_panels
from wickbench.results import ResultRecord

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
COEFFICIENT_TAIL = 1e-12
TIME_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SwitchSpec:
    """Laplace data of a switch: atoms (ξ_k, w_k) and an optional density h on a grid.

    onset_power is the exponent k of |h(ξ)| ~ ξ^k as ξ → 0 when it is known in
    closed form; sampled densities cannot resolve it below their noise floor.
    """

    atoms: Tuple[Tuple[float, float], ...] = ()
    grid: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    label: str = "custom"
    onset_power: Optional[float] = None
    _moments: Dict[str, float] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        atoms = tuple((float(xi), float(w)) for xi, w in self.atoms)
        for xi, w in atoms:
            if not (math.isfinite(xi) and xi > 0):
                raise SwitchAssumptionViolated(f"atom frequency must be positive, got {xi}")
            if not math.isfinite(w):
                raise SwitchAssumptionViolated(f"atom weight must be finite, got {w}")
        object.__setattr__(self, "atoms", atoms)

        if (self.grid is None) != (self.density is None):
            raise SwitchAssumptionViolated("grid and density must be given together")
        if self.grid is not None:
            grid = np.array(self.grid, dtype=float)
            values = np.array(self.density, dtype=float)
            if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
                raise SwitchAssumptionViolated("density must be sampled on a 1-D grid")
            if np.any(np.diff(grid) <= 0) or grid[0] < 0:
                raise SwitchAssumptionViolated("density grid must be increasing and >= 0")
            if not np.all(np.isfinite(values)):
                raise SwitchAssumptionViolated("density samples must be finite")
            grid.setflags(write=False)
            values.setflags(write=False)
            object.__setattr__(self, "grid", grid)
            object.__setattr__(self, "density", values)

    @property
    def has_density(self) -> bool:
        return self.grid is not None

    def _atom_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.atoms:
            return np.empty(0), np.empty(0)
        xi, w = np.array(self.atoms).T
        return xi, w

    def moment(self, power: float) -> float:
        """Σ|w_k| ξ_k^p + ∫|h(ξ)| ξ^p dξ."""
        key = f"abs:{power}"
        if key not in self._moments:
            xi, w = self._atom_arrays()
            total = float(np.sum(np.abs(w) * xi**power))
            if self.has_density:
                grid, h = self.grid, np.abs(self.density)
                positive = grid > 0
                if power < 0 and np.any(h[~positive] > 0):
                    total = math.inf
                else:
                    weights = np.zeros_like(grid)
                    weights[positive] = grid[positive] ** power
                    if power == 0:
                        weights[:] = 1.0
                    total += float(trapezoid(h * weights, grid))
            self._moments[key] = total
        return self._moments[key]

    @property
    def l1_norm(self) -> float:
        return self.moment(0)

    def moment_bounds(self, d: int, m: int = 1) -> Dict[str, float]:
        """The weighted norms that enter the adiabatic constants."""
        return {
            "l1": self.moment(0),
            "inv_xi": self.moment(-1),
            "xi": self.moment(1),
            "inv_xi_d2": self.moment(-(d + 2)),
            "xi_m1": self.moment(m + 1),
        }

    def check_assumptions(self, d: int) -> None:
        """Finite small-ξ and large-ξ moments.

        Raises:
            SwitchAssumptionViolated: if any required moment is not finite
        """
        for name, value in self.moment_bounds(d).items():
            if not math.isfinite(value):
                raise SwitchAssumptionViolated(f"switch moment {name} is not finite")
        # ∫₀¹ ξ^{k−(d+2)} dξ diverges for k ≤ d+1 even where the grid truncates it
        if self.has_density and self.onset_power is not None and self.onset_power <= d + 1:
            raise SwitchAssumptionViolated(
                f"density onset ξ^{self.onset_power:g} is too slow for d={d}: "
                f"∫₀¹ |h|/ξ^{d + 2} dξ diverges"
            )

    @property
    def value_at_zero(self) -> float:
        _, w = self._atom_arrays()
        total = float(np.sum(w))
        if self.has_density:
            total += float(trapezoid(self.density, self.grid))
        return total

    def signed_mass(self) -> Tuple[float, float]:
        """(positive mass, negative mass) of the Laplace data."""
        _, w = self._atom_arrays()
        positive = float(np.sum(w[w > 0]))
        negative = float(-np.sum(w[w < 0]))
        if self.has_density:
            positive += float(trapezoid(np.clip(self.density, 0, None), self.grid))
            negative += float(trapezoid(np.clip(-self.density, 0, None), self.grid))
        return positive, negative


class GapReport(ResultRecord):
    """Distance between g(ηt) and g_{β,η}(t) next to its two bounds."""

    beta: float
    eta: float
    t: float
    gap: float
    uniform_bound: float
    pointwise_bound: float


@dataclass(frozen=True, eq=False)
class PeriodizedSwitch:
    """Coefficients g̃(ω) on ω = (2π/β)(m+1), m = 0, 1, ..."""

    beta: float
    eta: float
    omegas: np.ndarray
    coefficients: np.ndarray
    tail_bound: float
    l1_norm: float

    @property
    def coefficient_mass(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    @property
    def slack(self) -> float:
        """‖h‖₁ − Σ|g̃(ω)|, non-negative."""
        return self.l1_norm - self.coefficient_mass

    def coefficient(self, omega: float) -> float:
        """g̃(ω); zero off the stored support, including ω = 0."""
        matches = np.isclose(self.omegas, omega, rtol=1e-12, atol=0.0)
        return float(self.coefficients[matches].sum()) if omega > 0 else 0.0


def exponential_switch(rate: float = 1.0) -> SwitchSpec:
    """g(t) = e^{rate·t}."""
    return SwitchSpec(atoms=((rate, 1.0),), label="exp")


def flat_switch(m: int) -> SwitchSpec:
    """g(t) = 1 - (1 - e^t)^m as m binomial atoms; derivatives 1..m-1 vanish at 0."""
    if m < 1:
        raise SwitchAssumptionViolated(f"flat switch needs m >= 1, got {m}")
    atoms = tuple(
        (float(k), float((-1) ** (k + 1) * comb(m, k, exact=True)))
        for k in range(1, m + 1)
    )
    return SwitchSpec(atoms=atoms, label=f"poly_flat:{m}")


def atom_switch(atoms: Sequence[Sequence[float]]) -> SwitchSpec:
    return SwitchSpec(atoms=tuple((xi, w) for xi, w in atoms), label="atoms")


def _chunk_size(width: int) -> int:
    """Rows per block so one block holds about 2e6 entries."""
    return max(1, 2_000_000 // max(width, 1))


def eval_switch(spec: SwitchSpec, t: Any) -> Any:
    """
    g(t) for t ≤ 0 (scalar or array).

    Raises:
        PositiveTimeUnsupported: if any t > 0
    """
    times = np.asarray(t, dtype=float)
    if np.any(times > TIME_TOL):
        raise PositiveTimeUnsupported(f"switch evaluated at positive time {np.max(times)}")
    flat = np.atleast_1d(times).ravel()
    xi, w = spec._atom_arrays()
    values = np.exp(np.multiply.outer(flat, xi)) @ w if xi.size else np.zeros(flat.size)
    if spec.has_density:
        size = _chunk_size(spec.grid.size)
        for i in range(0, flat.size, size):
            kernel = np.exp(np.multiply.outer(flat[i : i + size], spec.grid)) * spec.density
            values[i : i + size] += trapezoid(kernel, spec.grid, axis=1)
    if times.ndim == 0:
        return float(values[0])
    return values.reshape(times.shape)


def periodize(spec: SwitchSpec, beta: float, eta: float) -> PeriodizedSwitch:
    """
    Bin the Laplace data onto ω = (2π/β)(m+1).

    Mass with ξ in [2πm/(βη), 2π(m+1)/(βη)) goes to ω = (2π/β)(m+1). Density bins
    integrate the piecewise-linear interpolant of h exactly, so Σ|g̃| ≤ ‖h‖₁ holds
    up to rounding. Coefficients are kept until the discarded ℓ¹ tail falls below
    1e-12·‖h‖₁.
    """
    if beta <= 0 or eta <= 0:
        raise ValueError(f"beta and eta must be positive, got {beta}, {eta}")
    width = TWO_PI / (beta * eta)
    bins: Dict[int, float] = {}

    for xi, w in spec.atoms:
        m = int(math.floor(xi / width))
        bins[m] = bins.get(m, 0.0) + w

    if spec.has_density:
        grid, h = spec.grid, spec.density
        first, last = int(math.floor(grid[0] / width)), int(math.floor(grid[-1] / width))
        edges = width * np.arange(first + 1, last + 1)
        edges = edges[(edges > grid[0]) & (edges < grid[-1])]
        refined = np.union1d(grid, edges)
        values = np.interp(refined, grid, h)
        segments = 0.5 * (values[1:] + values[:-1]) * np.diff(refined)
        midpoints = 0.5 * (refined[1:] + refined[:-1])
        segment_bins = np.floor(midpoints / width).astype(int)
        for m, mass in zip(*_accumulate(segment_bins, segments)):
            bins[m] = bins.get(m, 0.0) + mass

    ms = np.array(sorted(bins), dtype=int)
    coefficients = np.array([bins[m] for m in ms], dtype=float)
    nonzero = coefficients != 0.0
    ms, coefficients = ms[nonzero], coefficients[nonzero]

    l1 = spec.l1_norm
    tails = np.cumsum(np.abs(coefficients)[::-1])[::-1]
    threshold = COEFFICIENT_TAIL * l1
    below = np.nonzero(tails < threshold)[0]
    keep = int(below[0]) if below.size else coefficients.size
    tail_bound = float(tails[keep]) if keep < coefficients.size else 0.0

    omegas = TWO_PI / beta * (ms[:keep] + 1)
    logger.debug(
        f"Periodized {spec.label} at beta={beta}, eta={eta}: {keep} frequencies, "
        f"tail {tail_bound:.3g}"
    )
    omegas = omegas.astype(float)
    kept = coefficients[:keep].copy()
    omegas.setflags(write=False)
    kept.setflags(write=False)
    return PeriodizedSwitch(beta, eta, omegas, kept, tail_bound, l1)


def _accumulate(keys: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    unique, inverse = np.unique(keys, return_inverse=True)
    return unique, np.bincount(inverse, weights=values)


def eval_periodized(ps: PeriodizedSwitch, z: Any) -> Any:
    """
    g_{β,η}(z) = Σ_ω g̃(ω) e^{ωz} for Re z ≤ 0 (scalar or array).

    Raises:
        PositiveTimeUnsupported: if Re z > 0
    """
    points = np.asarray(z, dtype=complex)
    if np.any(points.real > TIME_TOL):
        raise PositiveTimeUnsupported(
            f"periodized switch evaluated at Re z = {np.max(points.real)}"
        )
    flat = np.atleast_1d(points).ravel()
    size = _chunk_size(ps.omegas.size)
    values = np.zeros(flat.size, dtype=complex)
    for i in range(0, flat.size, size):
        values[i : i + size] = (
            np.exp(np.multiply.outer(flat[i : i + size], ps.omegas)) @ ps.coefficients
        )
    if points.ndim == 0:
        return complex(values[0])
    return values.reshape(points.shape)


def approximation_gap(spec: SwitchSpec, ps: PeriodizedSwitch, t: float) -> GapReport:
    """|g_{β,η}(t) − g(ηt)| with the uniform bound (2π/(eβη))‖h/ξ‖₁ and the pointwise one."""
    if t > TIME_TOL:
        raise PositiveTimeUnsupported(f"approximation gap at positive time {t}")
    true_value = eval_switch(spec, ps.eta * t)
    periodized_value = eval_periodized(ps, complex(t))
    gap = abs(periodized_value - true_value)

    xi, w = spec._atom_arrays()
    weighted = float(np.sum(np.abs(w) * np.exp(xi * ps.eta * t)))
    if spec.has_density:
        weighted += float(
            trapezoid(np.abs(spec.density) * np.exp(spec.grid * ps.eta * t), spec.grid)
        )
    return GapReport(
        anchor="switch_approximation_gap",
        beta=ps.beta,
        eta=ps.eta,
        t=t,
        gap=float(gap),
        uniform_bound=TWO_PI / (math.e * ps.beta * ps.eta) * spec.moment(-1),
        pointwise_bound=TWO_PI * abs(t) / ps.beta * weighted,
    )


def switch_derivative(spec: SwitchSpec, j: int, eta: float = 1.0) -> float:
    """∂_t^j g(ηt) at t = 0."""
    xi, w = spec._atom_arrays()
    total = float(np.sum(w * xi**j))
    if spec.has_density:
        total += float(trapezoid(spec.density * spec.grid**j, spec.grid))
    return eta**j * total


def periodized_derivative(ps: PeriodizedSwitch, j: int) -> float:
    """∂_t^j g_{β,η}(t) at t = 0."""
    return float(np.sum(ps.coefficients * ps.omegas**j))


class DerivativeBound(ResultRecord):
    """|∂^j g_{β,η}(0)| against constant · Σ_{ℓ=1}^j η^{j-ℓ} β^{-ℓ}."""

    order: int
    value: float
    scale: float
    constant: float

    @property
    def ratio(self) -> float:
        return self.value / self.scale


def derivative_bound_ratio(spec: SwitchSpec, beta: float, eta: float, j: int) -> DerivativeBound:
    """
    Compare the periodized j-th derivative at 0 with its η,β scale.

    When ∂^j g(0) = 0 the binomial expansion of ω^j = (ηξ + δ)^j with 0 < δ ≤ 2π/β
    gives |∂^j g_{β,η}(0)| ≤ constant · scale with
    constant = max_ℓ C(j,ℓ)(2π)^ℓ Σ|w| ξ^{j-ℓ}.
    """
    ps = periodize(spec, beta, eta)
    scale = sum(eta ** (j - ell) * beta ** (-ell) for ell in range(1, j + 1))
    constant = max(
        comb(j, ell) * TWO_PI**ell * spec.moment(j - ell) for ell in range(1, j + 1)
    )
    return DerivativeBound(
        anchor=f"periodized_derivative:j={j}",
        order=j,
        value=abs(periodized_derivative(ps, j)),
        scale=scale,
        constant=float(constant),
    )


def tail_integral(spec: SwitchSpec, eta: float, cutoff: float) -> float:
    """Bound on ∫_{-∞}^{-T} |g(ηs)| ds: Σ|w| e^{-ηξT}/(ηξ) plus the density analogue."""
    xi, w = spec._atom_arrays()
    total = float(np.sum(np.abs(w) * np.exp(-eta * xi * cutoff) / (eta * xi)))
    if spec.has_density:
        positive = spec.grid > 0
        grid, h = spec.grid[positive], np.abs(spec.density[positive])
        total += float(trapezoid(h * np.exp(-eta * grid * cutoff) / (eta * grid), grid))
    return total


def periodized_tail_integral(ps: PeriodizedSwitch, cutoff: float) -> float:
    """Bound on ∫_{-∞}^{-T} |g_{β,η}(s)| ds; decays like e^{-(2π/β)T}."""
    return float(np.sum(np.abs(ps.coefficients) * np.exp(-ps.omegas * cutoff) / ps.omegas))


def default_cutoff(spec: SwitchSpec, eta: float, rel_tol: float = 1e-8) -> float:
    """
    Real-time cutoff T for the true switch.

    Smallest T with tail(T) ≤ rel_tol·tail(0), rounded up to a multiple of 10/η
    (20/η for the exponential switch).
    """
    total = tail_integral(spec, eta, 0.0)
    if total == 0.0:
        return 10.0 / eta
    target = rel_tol * total
    upper = 10.0 / eta
    while tail_integral(spec, eta, upper) > target:
        upper *= 2.0
    exact = brentq(lambda cut: tail_integral(spec, eta, cut) - target, 0.0, upper)
    cutoff = 10.0 / eta * math.ceil(exact * eta / 10.0 - 1e-9)
    logger.debug(f"Cutoff for {spec.label} at eta={eta}: {cutoff:.4g} (exact {exact:.4g})")
    return cutoff


def periodized_cutoff(ps: PeriodizedSwitch, rel_tol: float = 1e-8) -> float:
    """Cutoff T for g_{β,η} under the same rule as default_cutoff."""
    total = periodized_tail_integral(ps, 0.0)
    if total == 0.0:
        return 10.0 / ps.eta
    target = rel_tol * total
    upper = 10.0 / ps.eta
    while periodized_tail_integral(ps, upper) > target:
        upper *= 2.0
    exact = brentq(lambda cut: periodized_tail_integral(ps, cut) - target, 0.0, upper)
    return 10.0 / ps.eta * math.ceil(exact * ps.eta / 10.0 - 1e-9)


@dataclass(frozen=True)
class RationalLaplace:
    """g(z) = prefactor / (z − a)^n, analytic for Re z < a."""

    a: float
    n: int
    prefactor: float = 1.0

    def __post_init__(self) -> None:
        if self.a <= 0 or self.n < 1:
            raise SwitchAssumptionViolated(f"need a > 0 and n >= 1, got a={self.a}, n={self.n}")

    def __call__(self, z: Any) -> Any:
        return self.prefactor / (np.asarray(z, dtype=complex) - self.a) ** self.n

    def closed_form(self, xi: Any) -> Any:
        """Known inverse: prefactor·(−1)^n ξ^{n−1} e^{−aξ}/(n−1)!."""
        xi = np.asarray(xi, dtype=float)
        return (
            self.prefactor
            * (-1) ** self.n
            * xi ** (self.n - 1)
            * np.exp(-self.a * xi)
            / math.factorial(self.n - 1)
        )


@lru_cache(maxsize=8)
def _contour_rule(y_max: float, node_count: int, scale: float) -> Tuple[np.ndarray, np.ndarray]:
    # sinh-stretched panels: fine near Im z = 0 where g varies, coarse in the tails
    u_max = math.asinh(y_max / scale)
    u_nodes, u_weights = gauss_legendre_panels(-u_max, u_max, 2 * u_max / node_count, 8)
    nodes = scale * np.sinh(u_nodes)
    weights = scale * np.cosh(u_nodes) * u_weights
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def contour_tail_estimate(gz: RationalLaplace, xi: float, abscissa: float, y_max: float) -> float:
    """Magnitude of the discarded |Im z| > y_max part of the Bromwich integral."""
    if gz.n == 1:
        return math.inf
    tail = 2.0 * abs(gz.prefactor) * y_max ** (1 - gz.n) / (gz.n - 1)
    return math.exp(-abscissa * xi) * tail / TWO_PI


def inverse_laplace(
    gz: RationalLaplace,
    xi: float,
    contour_abscissa: Optional[float] = None,
    node_count: int = 8000,
    y_max: float = 1e3,
    tail_tolerance: float = 1e-8,
) -> float:
    """
    h(ξ) such that g(t) = ∫₀^∞ e^{ξt} h(ξ) dξ, from a vertical line Re z = c < a.

    h(ξ) = (e^{−cξ}/2π) ∫ e^{−iyξ} g(c + iy) dy over |y| ≤ y_max, integrated with
    node_count Gauss-Legendre panels.

    Warns:
        ContourTruncationWarning: if the estimated truncation tail exceeds tail_tolerance
    """
    c = gz.a / 2 if contour_abscissa is None else contour_abscissa
    if c >= gz.a:
        raise SwitchAssumptionViolated(f"contour abscissa {c} must lie left of the pole {gz.a}")
    tail = contour_tail_estimate(gz, xi, c, y_max)
    if tail > tail_tolerance:
        warnings.warn(
            f"inverse Laplace contour truncated at |Im z| = {y_max:g}: tail {tail:.3g}",
            ContourTruncationWarning,
            stacklevel=2,
        )
    y, w = _contour_rule(float(y_max), int(node_count), max(gz.a - c, 1e-3))
    integrand = np.exp(-1j * y * xi) * gz(c + 1j * y)
    return float(np.real(np.exp(-c * xi) * np.dot(w, integrand) / TWO_PI))


def laplace_round_trip(gz: RationalLaplace, t: float, grid: np.ndarray, **kwargs: Any) -> float:
    """∫ e^{ξt} h(ξ) dξ with h from inverse_laplace on a uniform grid (Simpson rule)."""
    values = np.array([inverse_laplace(gz, float(x), **kwargs) for x in grid])
    return float(simpson(np.exp(grid * t) * values, x=grid))


def rational_switch(a: float, n: int, grid: Optional[np.ndarray] = None) -> SwitchSpec:
    """
    g(t) = (a/(a − t))^n with h built numerically by inverse_laplace.

    The density lives on a log-spaced grid (with ξ = 0 prepended) so both small-ξ and
    large-ξ moments are resolved. h(ξ) ∝ ξ^{n−1} near the origin, so for n ≥ 2 the
    sample at ξ = 0 is set to its exact value 0 instead of the contour rule's residue.
    """
    if grid is None:
        grid = np.concatenate([[0.0], np.geomspace(1e-3 / a, 60.0 / a, 400)])
    grid = np.asarray(grid, dtype=float)
    gz = RationalLaplace(a=a, n=n, prefactor=(-a) ** n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ContourTruncationWarning)
        values = np.array([inverse_laplace(gz, float(x)) for x in grid])
    if n >= 2:
        values[grid == 0.0] = 0.0
    return SwitchSpec(
        grid=grid, density=values, label=f"rational:{a}:{n}", onset_power=float(n - 1)
    )


def switch_from_descriptor(descriptor: Mapping[str, Any]) -> SwitchSpec:
    """
    Build a switch from its config form.

    {"type": "exp"} | {"type": "poly_flat", "m": int} |
    {"type": "atoms", "list": [[ξ, w], ...]} | {"type": "rational", "a": float, "n": int}
    """
    kind = descriptor.get("type")
    if kind == "exp":
        return exponential_switch(float(descriptor.get("rate", 1.0)))
    if kind == "poly_flat":
        return flat_switch(int(descriptor["m"]))
    if kind == "atoms":
        return atom_switch(descriptor["list"])
    if kind == "rational":
        return rational_switch(float(descriptor["a"]), int(descriptor["n"]))
    raise SwitchAssumptionViolated(f"unknown switch type {kind!r}")
