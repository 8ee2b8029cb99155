"""
Tests for Gibbs states, KMS, time ordering and cumulants.
"""

import numpy as np
import pytest

from wickbench.equilibrium import (
    TimedObservable,
    beta_seminorm,
    euclidean_evolve,
    gibbs_invariance_residual,
    gibbs_state,
    instantaneous_gibbs_expectation,
    kms_residual,
    moments_from_cumulants,
    set_partitions,
    time_ordered_cumulant,
    time_ordered_expectation,
)
from wickbench.exceptions import (
    CumulantOrderExceeded,
    OddOperatorUnsupported,
    OperatorContractError,
    OverflowRisk,
)
from wickbench.hamiltonians import LocalObservable, build_hamiltonian, interaction_kernel
from wickbench.lattice_fock import annihilation, density, number_operator, random_local_operator
from wickbench.quadrature import QuadratureControls


class TestGibbsState:
    """Test construction of the grand-canonical state."""

    def test_weights_normalized(self, ensemble):
        """Boltzmann weights are non-negative and sum to one."""
        assert np.sum(ensemble.weights) == pytest.approx(1.0, abs=1e-14)
        assert np.min(ensemble.weights) >= 0.0
        assert np.trace(ensemble.density_matrix()).real == pytest.approx(1.0, abs=1e-13)

    def test_fermi_occupation(self, basis, kernel, ensemble):
        """⟨N⟩ of a quadratic model is the Fermi sum over one-body levels."""
        levels = kernel.spectrum()
        fermi = np.sum(1.0 / (1.0 + np.exp(ensemble.beta * (levels - ensemble.mu))))
        assert ensemble.expectation(number_operator(basis)).real == pytest.approx(fermi, abs=1e-12)

    def test_log_partition(self, kernel, ensemble):
        """log Z = Σ log(1 + e^{−β(e − μ)}) for a quadratic model."""
        levels = kernel.spectrum()
        expected = np.sum(np.log1p(np.exp(-ensemble.beta * (levels - ensemble.mu))))
        assert ensemble.log_partition == pytest.approx(expected, abs=1e-12)

    def test_large_beta_is_finite(self, hamiltonian):
        """Very low temperatures stay finite thanks to the shifted energies."""
        ens = gibbs_state(hamiltonian, beta=500.0, mu=0.0)
        assert np.all(np.isfinite(ens.weights))
        assert np.isfinite(ens.log_partition)

    def test_ground_state_limit(self, hamiltonian):
        """At low temperature the state approaches the normalized ground projector."""
        ens = gibbs_state(hamiltonian, beta=60.0, mu=0.1)
        projector = ens.ground_projector()
        assert np.trace(projector).real == pytest.approx(1.0)
        np.testing.assert_allclose(ens.density_matrix(), projector, atol=1e-8)

    def test_rejects_non_conserving(self, basis):
        """A Hamiltonian that does not conserve N is refused."""
        H = annihilation(basis, 0) + annihilation(basis, 0).adjoint()
        with pytest.raises(OperatorContractError):
            gibbs_state(H, 1.0, 0.0)

    def test_rejects_non_positive_beta(self, hamiltonian):
        """β must be positive."""
        with pytest.raises(ValueError):
            gibbs_state(hamiltonian, 0.0, 0.0)


class TestEuclideanEvolution:
    """Test γ_t, τ_t and the KMS condition."""

    def test_kms(self, basis, ensemble, rng):
        """⟨γ_t1(A)γ_t2(B)⟩ = ⟨γ_{t2+β}(B)γ_t1(A)⟩ for random local operators and times."""
        for t1, t2 in rng.uniform(0.0, ensemble.beta, size=(100, 2)):
            A = random_local_operator(basis, rng)
            B = random_local_operator(basis, rng)
            assert kms_residual(ensemble, A, B, t1, t2) <= 1e-10

    def test_kms_interacting(self, basis, kernel, rng):
        """KMS holds with a density-density interaction as well."""
        H = build_hamiltonian(basis, kernel, interaction_kernel(basis.geometry, u=0.8, coupling=1.0))
        ens = gibbs_state(H, beta=2.0, mu=0.3)
        for t1, t2 in rng.uniform(0.0, ens.beta, size=(100, 2)):
            A = random_local_operator(basis, rng)
            B = random_local_operator(basis, rng)
            assert kms_residual(ens, A, B, t1, t2) <= 1e-10

    def test_gibbs_invariance(self, basis, ensemble):
        """The Gibbs state is invariant under the real-time dynamics."""
        for t in (-3.0, 0.7, 5.0):
            assert gibbs_invariance_residual(ensemble, density(basis, 1), t) <= 1e-12

    def test_euclidean_group(self, basis, ensemble):
        """γ_{−t}(γ_t(O)) = O."""
        O = LocalObservable("bond", (0,), (1,)).operator(basis)
        back = euclidean_evolve(ensemble, euclidean_evolve(ensemble, O, 0.8), -0.8)
        np.testing.assert_allclose(back.matrix, O.matrix, atol=1e-11)

    def test_overflow_budget(self, hamiltonian, basis):
        """Exponents beyond the budget raise instead of overflowing."""
        ens = gibbs_state(hamiltonian, 1.0, 0.0, exponent_budget=1.0)
        with pytest.raises(OverflowRisk):
            euclidean_evolve(ens, density(basis, 0), 50.0)


class TestTimeOrdering:
    """Test time-ordered moments and cumulants."""

    def test_empty_product(self, ensemble):
        """The empty time-ordered product is one."""
        assert time_ordered_expectation(ensemble, []) == 1.0

    def test_periodicity(self, basis, ensemble):
        """Shifting one time by β leaves even moments unchanged."""
        A, B = density(basis, 0), density(basis, 2)
        items = [TimedObservable(A, 0.4), TimedObservable(B, 1.1)]
        shifted = [TimedObservable(A, 0.4 + ensemble.beta), TimedObservable(B, 1.1)]
        assert time_ordered_expectation(ensemble, shifted) == pytest.approx(
            time_ordered_expectation(ensemble, items), abs=1e-12
        )

    def test_order_independence(self, basis, ensemble):
        """The time-ordered product does not depend on the argument order."""
        A, B = density(basis, 0), LocalObservable("bond", (1,), (2,)).operator(basis)
        forward = [TimedObservable(A, 0.3), TimedObservable(B, 1.2)]
        assert time_ordered_expectation(ensemble, forward[::-1]) == pytest.approx(
            time_ordered_expectation(ensemble, forward), abs=1e-12
        )

    def test_second_cumulant(self, basis, ensemble):
        """⟨A; B⟩ = ⟨T A B⟩ − ⟨A⟩⟨B⟩."""
        A, B = density(basis, 0), density(basis, 1)
        items = [TimedObservable(A, 0.9), TimedObservable(B, 0.2)]
        expected = time_ordered_expectation(ensemble, items) - (
            ensemble.expectation(A) * ensemble.expectation(B)
        )
        assert time_ordered_cumulant(ensemble, items) == pytest.approx(expected, abs=1e-13)

    def test_moment_cumulant_inversion(self, basis, ensemble, rng):
        """Summing cumulants over partitions gives back the moment."""
        ops = [density(basis, 0), density(basis, 1), LocalObservable("bond", (0,), (2,)).operator(basis)]
        times = rng.uniform(0.0, ensemble.beta, size=3)
        items = [TimedObservable(op, float(s)) for op, s in zip(ops, times)]
        assert moments_from_cumulants(ensemble, items) == pytest.approx(
            time_ordered_expectation(ensemble, items), abs=1e-12
        )

    def test_cumulant_cap(self, basis, ensemble):
        """Partition inversion refuses more items than the cap."""
        items = [TimedObservable(density(basis, 0), 0.1 * k) for k in range(5)]
        with pytest.raises(CumulantOrderExceeded):
            time_ordered_cumulant(ensemble, items)

    def test_odd_operator(self, basis, ensemble):
        """Odd operators cannot be time ordered."""
        with pytest.raises(OddOperatorUnsupported):
            time_ordered_expectation(ensemble, [TimedObservable(annihilation(basis, 0), 0.0)])

    def test_partition_count(self):
        """Four elements have fifteen set partitions (Bell number)."""
        assert len(list(set_partitions([0, 1, 2, 3]))) == 15

    def test_beta_seminorm(self):
        """Each time contributes its distance to the nearest multiple of β."""
        assert beta_seminorm([0.5, 1.8, 2.1], 2.0) == pytest.approx(0.5 + 0.2 + 0.1)


class TestInstantaneousGibbs:
    """Test the instantaneous Gibbs expectation two ways."""

    def test_series_matches_direct(self, dimer_driven, dimer_observable):
        """The second-order cumulant series agrees with diagonalization to O(ε³)."""
        driven = dimer_driven.with_epsilon(0.01)
        direct = instantaneous_gibbs_expectation(driven, 2.0, 0.0, dimer_observable, -0.5)
        series = instantaneous_gibbs_expectation(
            driven, 2.0, 0.0, dimer_observable, -0.5,
            mode="series", n_max=2, controls=QuadratureControls(panel_width=0.25),
        )
        assert abs(direct - series) <= 1e-6

    def test_zero_strength(self, dimer_driven, dimer_observable):
        """Without perturbation both modes return ⟨O⟩."""
        driven = dimer_driven.with_epsilon(0.0)
        ens = gibbs_state(driven.base, 2.0, 0.0)
        value = instantaneous_gibbs_expectation(driven, 2.0, 0.0, dimer_observable, 0.0, mode="series")
        assert value == pytest.approx(ens.expectation(dimer_observable))

    def test_unknown_mode(self, dimer_driven, dimer_observable):
        """Only direct and series modes exist."""
        with pytest.raises(ValueError):
            instantaneous_gibbs_expectation(dimer_driven, 1.0, 0.0, dimer_observable, 0.0, mode="other")
