"""
Tests for the torus geometry, Fock basis and Jordan-Wigner operators.
"""

import itertools

import numpy as np
import pytest

from wickbench.exceptions import ModeCountExceeded, SiteOutOfRange
from wickbench.lattice_fock import (
    LatticeGeometry,
    annihilation,
    bilinear,
    binomial_multiplicities,
    build_fock_basis,
    creation,
    density,
    diameter,
    mode_budget,
    number_operator,
    random_local_operator,
    sector_multiplicities,
    torus_distance,
)


class TestLatticeGeometry:
    """Test site enumeration and torus distances."""

    def test_site_count(self):
        """n_sites is M·L^d."""
        assert LatticeGeometry(d=2, L=3, M=2).n_sites == 18

    def test_index_round_trip(self):
        """Every site maps back to its own index."""
        geometry = LatticeGeometry(d=2, L=2, M=2)
        for k, site in enumerate(geometry.sites):
            assert geometry.index(site) == k
            assert geometry.site(k) == site

    def test_label_defaults_to_zero(self):
        """Coordinates without a label mean label 0."""
        geometry = LatticeGeometry(d=1, L=4, M=2)
        assert geometry.index((3,)) == geometry.index((3, 0))

    def test_out_of_range_site(self):
        """Sites outside the torus are rejected."""
        geometry = LatticeGeometry(d=1, L=3)
        with pytest.raises(SiteOutOfRange):
            geometry.index((3,))
        with pytest.raises(SiteOutOfRange):
            geometry.index(7)

    def test_invalid_geometry(self):
        """Non-positive sizes are rejected."""
        with pytest.raises(ValueError):
            LatticeGeometry(d=1, L=0)

    def test_wrapped_distance(self):
        """Distances wrap around the torus."""
        geometry = LatticeGeometry(d=1, L=5)
        assert torus_distance(geometry, 0, 4) == pytest.approx(1.0)
        assert torus_distance(geometry, 0, 2) == pytest.approx(2.0)

    def test_translate_keeps_label(self):
        """A cell shift moves coordinates only."""
        geometry = LatticeGeometry(d=1, L=3, M=2)
        moved = geometry.translate((2, 1), (1,))
        assert geometry.site(moved) == (0, 1)

    def test_diameter(self):
        """Diameter is the largest pairwise distance; single modes have zero."""
        geometry = LatticeGeometry(d=1, L=6)
        assert diameter(geometry, [0, 1, 3]) == pytest.approx(3.0)
        assert diameter(geometry, [2]) == 0.0


class TestFockBasis:
    """Test basis enumeration and the dense budget."""

    def test_lexicographic_order(self):
        """Mode 0 is the most significant bit."""
        basis = build_fock_basis(LatticeGeometry(d=1, L=3), max_modes=12)
        assert basis.dimension == 8
        np.testing.assert_array_equal(basis.occupations[4], [1, 0, 0])
        np.testing.assert_array_equal(basis.occupations[1], [0, 0, 1])

    def test_sector_multiplicities(self):
        """Each particle-number sector has C(n_modes, n) states."""
        basis = build_fock_basis(LatticeGeometry(d=1, L=4), max_modes=12)
        assert sector_multiplicities(basis) == binomial_multiplicities(4)

    def test_mode_budget_exceeded(self):
        """Lattices beyond the mode budget are refused."""
        with pytest.raises(ModeCountExceeded, match="WICKBENCH_MAX_DIM"):
            build_fock_basis(LatticeGeometry(d=1, L=5), max_modes=4)

    def test_default_budget(self):
        """Without WICKBENCH_MAX_DIM the budget is twelve modes."""
        assert mode_budget() == 12

    def test_budget_from_dimension(self, monkeypatch):
        """WICKBENCH_MAX_DIM is a Fock dimension, so the budget is its log2."""
        monkeypatch.setenv("WICKBENCH_MAX_DIM", "100")
        assert mode_budget() == 6
        with pytest.raises(ModeCountExceeded):
            build_fock_basis(LatticeGeometry(d=1, L=7))


class TestOperators:
    """Test canonical anticommutation relations and operator tags."""

    def setup_method(self):
        """Set up a four-mode basis."""
        self.basis = build_fock_basis(LatticeGeometry(d=1, L=4), max_modes=12)

    def test_anticommutation(self):
        """{a_x, a*_y} = δ_xy and {a_x, a_y} = 0."""
        eye = np.eye(self.basis.dimension)
        for x, y in itertools.product(range(4), repeat=2):
            a_x, a_y = annihilation(self.basis, x), annihilation(self.basis, y)
            c_y = creation(self.basis, y)
            mixed = a_x.matrix @ c_y.matrix + c_y.matrix @ a_x.matrix
            np.testing.assert_allclose(mixed, eye if x == y else 0 * eye, atol=1e-14)
            pure = a_x.matrix @ a_y.matrix + a_y.matrix @ a_x.matrix
            np.testing.assert_allclose(pure, 0 * eye, atol=1e-14)

    def test_bilinear_matches_products(self):
        """The direct bilinear builder agrees with a*_x a_y."""
        for x, y in itertools.product(range(4), repeat=2):
            direct = bilinear(self.basis, x, y).matrix
            product = (creation(self.basis, x) @ annihilation(self.basis, y)).matrix
            np.testing.assert_allclose(direct, product, atol=1e-14)

    def test_number_operator(self):
        """N is the sum of the site densities."""
        total = sum(density(self.basis, x).matrix for x in range(4))
        np.testing.assert_allclose(number_operator(self.basis).matrix, total)

    def test_parity_tags(self):
        """Single fermion operators are odd, bilinears even."""
        a = annihilation(self.basis, 1)
        assert a.even is False
        assert not a.gauge_invariant
        assert (creation(self.basis, 0) @ a).even is True
        assert density(self.basis, 2).support == frozenset({2})

    def test_non_square_matrix(self):
        """Operators must be square."""
        from wickbench.lattice_fock import FockOperator

        with pytest.raises(ValueError):
            FockOperator(np.zeros((2, 3)))

    def test_random_local_operator(self, rng):
        """Random local operators are even and live on two modes."""
        for _ in range(20):
            op = random_local_operator(self.basis, rng)
            assert op.even is True
            assert len(op.support) <= 2
            assert np.any(op.matrix != 0)
