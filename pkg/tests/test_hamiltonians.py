"""
Tests for kernels, second quantization, observables and the driven Hamiltonian.
"""

import numpy as np
import pytest

from wickbench.exceptions import KernelNotHermitian, OperatorContractError, RangeViolation
from wickbench.hamiltonians import (
    DrivenHamiltonian,
    LocalObservable,
    QuadraticKernel,
    build_hamiltonian,
    build_quadratic,
    build_quartic,
    interaction_kernel,
    local_perturbation,
    local_term_norm_max,
    local_terms,
    nearest_neighbor_kernel,
    one_body_gap,
)
from wickbench.lattice_fock import (
    LatticeGeometry,
    annihilation,
    build_fock_basis,
    creation,
    density,
)
from wickbench.switch import exponential_switch


class TestKernels:
    """Test one-body and interaction kernels."""

    def test_ring_spectrum(self):
        """Hopping −1 on a four-site ring has levels −2cos(2πk/4)."""
        kernel = nearest_neighbor_kernel(LatticeGeometry(d=1, L=4))
        np.testing.assert_allclose(kernel.spectrum(), [-2.0, 0.0, 0.0, 2.0], atol=1e-12)

    def test_staggered_potential(self):
        """The staggered term alternates in sign along the chain."""
        kernel = nearest_neighbor_kernel(LatticeGeometry(d=1, L=4), hopping=0.0, staggered=0.5)
        np.testing.assert_allclose(np.diag(kernel.matrix).real, [0.5, -0.5, 0.5, -0.5])
        assert kernel.range == 0.0

    def test_range_violation(self):
        """Entries beyond the declared range are rejected."""
        geometry = LatticeGeometry(d=1, L=5)
        matrix = np.zeros((5, 5))
        matrix[0, 2] = matrix[2, 0] = 1.0
        with pytest.raises(RangeViolation):
            QuadraticKernel(matrix, range=1.0).validate(geometry)

    def test_bound_violation(self):
        """Entries above the declared bound are rejected."""
        geometry = LatticeGeometry(d=1, L=2)
        kernel = QuadraticKernel(np.array([[3.0, 0.0], [0.0, 0.0]]), range=1.0, bound=1.0)
        with pytest.raises(RangeViolation):
            kernel.validate(geometry)

    def test_not_hermitian(self):
        """Non-Hermitian kernels are rejected."""
        geometry = LatticeGeometry(d=1, L=2)
        kernel = QuadraticKernel(np.array([[0.0, 1.0], [0.5, 0.0]]))
        with pytest.raises(KernelNotHermitian):
            kernel.validate(geometry)

    def test_one_body_gap(self):
        """Distance from μ to the closest one-body level."""
        kernel = nearest_neighbor_kernel(LatticeGeometry(d=1, L=4))
        assert one_body_gap(kernel, 1.0) == pytest.approx(1.0)
        assert one_body_gap(kernel, 0.0) == pytest.approx(0.0, abs=1e-12)


class TestSecondQuantization:
    """Test Fock-space Hamiltonians."""

    def setup_method(self):
        """Set up a three-site ring."""
        self.geometry = LatticeGeometry(d=1, L=3)
        self.basis = build_fock_basis(self.geometry, max_modes=12)
        self.kernel = nearest_neighbor_kernel(self.geometry, onsite=[0.3, -0.2, 0.1])

    def test_single_mode(self):
        """H = ε₀ n on one mode has eigenvalues 0 and ε₀."""
        basis = build_fock_basis(LatticeGeometry(d=1, L=1), max_modes=12)
        H = build_quadratic(basis, nearest_neighbor_kernel(basis.geometry, onsite=0.7))
        np.testing.assert_allclose(np.linalg.eigvalsh(H.matrix), [0.0, 0.7], atol=1e-14)

    def test_ground_energy_fills_negative_levels(self):
        """The quadratic ground energy is the sum of negative one-body levels."""
        H = build_quadratic(self.basis, self.kernel)
        levels = self.kernel.spectrum()
        assert np.linalg.eigvalsh(H.matrix)[0] == pytest.approx(np.sum(levels[levels < 0]))

    def test_quadratic_matches_operator_products(self):
        """Σ H(x;y) a*_x a_y built directly equals the operator product sum."""
        H = build_quadratic(self.basis, self.kernel)
        expected = np.zeros_like(H.matrix)
        for x in range(3):
            for y in range(3):
                pair = creation(self.basis, x) @ annihilation(self.basis, y)
                expected = expected + self.kernel.matrix[x, y] * pair.matrix
        np.testing.assert_allclose(H.matrix, expected, atol=1e-14)

    def test_quartic_is_density_density(self):
        """The interaction is Σ_{x≠y} v(x;y) n_x n_y."""
        interaction = interaction_kernel(self.geometry, u=0.5, coupling=1.0)
        V = build_quartic(self.basis, interaction)
        expected = np.zeros_like(V.matrix)
        for x in range(3):
            for y in range(3):
                if x != y:
                    n_x, n_y = density(self.basis, x).matrix, density(self.basis, y).matrix
                    expected = expected + interaction.matrix[x, y] * n_x @ n_y
        np.testing.assert_allclose(V.matrix, expected, atol=1e-14)

    def test_hamiltonian_tags(self):
        """H is self-adjoint and commutes with N."""
        interaction = interaction_kernel(self.geometry, u=0.5, coupling=0.2)
        H = build_hamiltonian(self.basis, self.kernel, interaction)
        assert H.is_self_adjoint()
        assert H.gauge_invariant

    def test_local_terms_sum_to_hamiltonian(self):
        """The local decomposition reassembles H, interaction included."""
        interaction = interaction_kernel(self.geometry, u=0.5, coupling=0.2)
        H = build_hamiltonian(self.basis, self.kernel, interaction)
        terms = local_terms(self.basis, self.kernel, interaction)
        total = sum(term.matrix for term in terms.values())
        np.testing.assert_allclose(total, H.matrix, atol=1e-13)
        assert all(term.is_self_adjoint() for term in terms.values())
        assert local_term_norm_max(self.basis, self.kernel, interaction) > 0

    def test_local_perturbation(self):
        """A site profile becomes Σ μ(x) n_x."""
        P = local_perturbation(self.basis, {0: 0.5, 2: -1.0})
        expected = 0.5 * density(self.basis, 0).matrix - density(self.basis, 2).matrix
        np.testing.assert_allclose(P.matrix, expected)


class TestLocalObservable:
    """Test observable templates."""

    def setup_method(self):
        """Set up a three-site ring."""
        self.geometry = LatticeGeometry(d=1, L=3)
        self.basis = build_fock_basis(self.geometry, max_modes=12)

    def test_bond_needs_partner(self):
        """Bond observables need a partner site."""
        with pytest.raises(OperatorContractError):
            LocalObservable("bond", (0,)).kernel(self.geometry)

    def test_current_is_self_adjoint(self):
        """The current i(a*_x a_y − a*_y a_x) is self-adjoint and even."""
        op = LocalObservable("current", (0,), (1,)).operator(self.basis)
        assert op.is_self_adjoint()
        assert op.even is True

    def test_identity_observable(self):
        """The identity template has empty support and a zero kernel."""
        template = LocalObservable("identity", (0,), amplitude=2.0)
        np.testing.assert_allclose(template.operator(self.basis).matrix, 2.0 * np.eye(8))
        assert not np.any(template.kernel(self.geometry))

    def test_translates(self):
        """A template has one translate per cell."""
        moved = LocalObservable("bond", (0,), (1,)).translates(self.geometry)
        assert [item.site for item in moved] == [(0, 0), (1, 0), (2, 0)]
        assert moved[2].partner == (0, 0)


class TestDrivenHamiltonian:
    """Test the driven Hamiltonian contract."""

    def test_instantaneous_hamiltonian(self, dimer_driven):
        """H(0) = H + ε g(0) P with g(0) = 1 for the exponential switch."""
        expected = dimer_driven.base.matrix + 0.05 * dimer_driven.perturbation.matrix
        np.testing.assert_allclose(dimer_driven.at(0.0).matrix, expected)

    def test_rejects_non_conserving_perturbation(self, dimer):
        """A perturbation that does not conserve particle number is refused."""
        H = build_hamiltonian(dimer, nearest_neighbor_kernel(dimer.geometry))
        P = annihilation(dimer, 0) + creation(dimer, 0)
        with pytest.raises(OperatorContractError):
            DrivenHamiltonian.on_basis(dimer, H, P, 0.1, exponential_switch(), 1.0)

    def test_rejects_non_positive_eta(self, dimer_driven):
        """η must be positive."""
        with pytest.raises(ValueError):
            dimer_driven.with_eta(0.0)
