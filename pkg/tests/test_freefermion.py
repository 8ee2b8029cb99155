"""
Tests for quasi-free two-point functions, ring cumulants and integrated cumulants.
"""

import numpy as np
import pytest

from wickbench.equilibrium import TimedObservable, gibbs_state, time_ordered_cumulant
from wickbench.exceptions import CumulantOrderExceeded, DegenerateFit, ObservableNotQuadratic
from wickbench.freefermion import (
    assumption1_integral,
    build_two_point_cache,
    decay_fit,
    quadratic_kernel_of,
    ring_cumulant,
    space_decay_fit,
    two_point,
    two_point_matrix,
    two_point_trace,
)
from wickbench.hamiltonians import LocalObservable, nearest_neighbor_kernel
from wickbench.lattice_fock import LatticeGeometry, creation, annihilation
from wickbench.quadrature import QuadratureControls


@pytest.fixture
def cache(kernel, ensemble):
    return build_two_point_cache(kernel, ensemble.beta, ensemble.mu)


class TestTwoPoint:
    """Test g₂ against Fock-space traces."""

    def test_matches_trace(self, cache, basis, ensemble, rng):
        """The closed form agrees with the trace oracle at random points."""
        for _ in range(10):
            t, t_p = (float(v) for v in rng.uniform(0.0, ensemble.beta, size=2))
            x, y = (int(v) for v in rng.integers(0, 3, size=2))
            assert two_point(cache, t, x, t_p, y) == pytest.approx(
                two_point_trace(ensemble, basis, t, x, t_p, y), abs=1e-10
            )

    def test_antiperiodic(self, cache):
        """Shifting one time by β flips the sign."""
        value = two_point(cache, 0.4, 0, 1.1, 2)
        assert two_point(cache, 0.4 + cache.beta, 0, 1.1, 2) == pytest.approx(-value, abs=1e-13)
        assert two_point(cache, 0.4, 0, 1.1 - cache.beta, 2) == pytest.approx(-value, abs=1e-13)

    def test_equal_time(self, cache, basis, ensemble):
        """At equal times g₂(t, x; t, x) = −⟨n_x⟩."""
        n_0 = creation(basis, 0) @ annihilation(basis, 0)
        assert two_point(cache, 0.0, 0, 0.0, 0) == pytest.approx(-ensemble.expectation(n_0), abs=1e-12)

    def test_matrix_entries(self, cache):
        """two_point_matrix collects the pointwise values."""
        G = two_point_matrix(cache, 0.9, 0.3)
        assert G[1, 2] == pytest.approx(two_point(cache, 0.9, 1, 0.3, 2))

    def test_diagonal_kernel(self):
        """A diagonal kernel keeps the exact identity eigenbasis."""
        geometry = LatticeGeometry(d=1, L=3)
        cache = build_two_point_cache(
            nearest_neighbor_kernel(geometry, hopping=0.0, onsite=[0.1, 0.2, 0.3]), 2.0, 0.0
        )
        assert cache.diagonal
        assert two_point(cache, 0.5, 0, 0.1, 1) == 0.0

    def test_trace_oracle_window(self, basis, ensemble):
        """The trace oracle only accepts times in [0, β)."""
        with pytest.raises(ValueError):
            two_point_trace(ensemble, basis, ensemble.beta, 0, 0.0, 0)


class TestRingCumulant:
    """Test connected correlations of quadratic observables."""

    def test_first_order_is_expectation(self, cache, chain, basis, ensemble):
        """A single ring is the expectation value."""
        template = LocalObservable("bond", (0,), (1,))
        assert ring_cumulant(cache, chain, [template], [0.0]) == pytest.approx(
            ensemble.expectation(template.operator(basis)), abs=1e-12
        )

    @pytest.mark.parametrize("order", [2, 3])
    def test_matches_exact_cumulant(self, cache, chain, basis, ensemble, rng, order):
        """Ring diagrams reproduce the exact cumulant of a free model."""
        templates = [LocalObservable("density", (k % 3,)) for k in range(order)]
        templates.append(LocalObservable("bond", (1,), (2,)))
        times = [float(v) for v in rng.uniform(0.0, ensemble.beta, size=order)] + [0.0]
        exact = time_ordered_cumulant(
            ensemble, [TimedObservable(t.operator(basis), s) for t, s in zip(templates, times)]
        )
        assert ring_cumulant(cache, chain, templates, times) == pytest.approx(exact, abs=1e-8)

    def test_cap(self, cache, chain):
        """More than six items are refused."""
        items = [LocalObservable("density", (0,))] * 7
        with pytest.raises(CumulantOrderExceeded):
            ring_cumulant(cache, chain, items, [0.0] * 7)

    def test_not_quadratic(self, chain, basis):
        """Fock operators and mis-shaped kernels are not quadratic observables."""
        with pytest.raises(ObservableNotQuadratic):
            quadratic_kernel_of(creation(basis, 0), chain)
        with pytest.raises(ObservableNotQuadratic):
            quadratic_kernel_of(np.eye(2), chain)

    def test_empty(self, cache, chain):
        """The empty ring vanishes."""
        assert ring_cumulant(cache, chain, [], []) == 0.0


class TestDecayFit:
    """Test exponential fits of |g₂|."""

    def test_space_decay(self, cache, chain):
        """A hopping chain decays away from the origin."""
        fit = space_decay_fit(cache, chain, 0, 0.3, 0.0)
        assert fit.points == 3
        assert fit.anchor == "two_point_space_decay"

    def test_all_below_floor(self):
        """Off-diagonal samples of a diagonal kernel vanish and cannot be fitted."""
        geometry = LatticeGeometry(d=1, L=3)
        cache = build_two_point_cache(nearest_neighbor_kernel(geometry, hopping=0.0, onsite=0.5), 1.0, 0.0)
        with pytest.raises(DegenerateFit):
            decay_fit(cache, geometry, [(0.0, 0, 0.0, 1), (0.2, 0, 0.0, 2)])


class TestIntegratedCumulant:
    """Test the weighted integrals of absolute cumulants."""

    @pytest.mark.parametrize("n", [1, 2])
    def test_dual_path(self, kernel, hamiltonian, basis, n):
        """Exact traces and ring diagrams agree on a free model."""
        beta, mu = 1.0, 0.1
        controls = QuadratureControls(panel_width=0.5, order=6)
        observable = LocalObservable("density", (1,))
        perturbation = LocalObservable("density", (0,))
        ens = gibbs_state(hamiltonian, beta, mu)
        exact = assumption1_integral(ens, basis, observable, perturbation, n, 1.0, controls)
        ring = assumption1_integral(
            build_two_point_cache(kernel, beta, mu), basis, observable, perturbation, n, 1.0, controls
        )
        assert exact.path == "exact" and ring.path == "ring"
        assert exact.value == pytest.approx(ring.value, abs=1e-7 * max(1.0, exact.value))
        assert exact.nodes == ring.nodes
        assert exact.value > 0

    def test_order_range(self, kernel, basis):
        """Only orders one to three are integrated."""
        cache = build_two_point_cache(kernel, 1.0, 0.0)
        template = LocalObservable("density", (0,))
        with pytest.raises(ValueError):
            assumption1_integral(cache, basis, template, template, 4)
