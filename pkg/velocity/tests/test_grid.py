"""
Tests for the velocity lattice and weight parameters.
"""

import numpy as np
import pytest

from core.exceptions import KineticException
from velocity.grid import VelocityGrid, WeightSpec


class TestVelocityGrid:
    """Tests for VelocityGrid"""

    def test_reference_grid_shape(self):
        """R_v = 6, dv = 0.75 has 17 nodes per axis"""
        grid = VelocityGrid(radius=6.0, spacing=0.75)

        assert grid.n_axis == 17
        assert grid.size == 17**3
        assert grid.extent == pytest.approx(6.0)
        assert grid.quad_weight == pytest.approx(0.75**3)

    def test_nodes_are_symmetric(self):
        """mirror_index maps every node v to -v"""
        grid = VelocityGrid(radius=2.0, spacing=1.0)

        assert np.array_equal(grid.nodes[grid.mirror_index], -grid.nodes)

    def test_maxwellian_mass_converges(self):
        """Lattice sum of mu with R_v = 6, dv = 0.5 is 1 within 1e-3"""
        grid = VelocityGrid(radius=6.0, spacing=0.5)

        assert grid.mu_mass == pytest.approx(1.0, abs=1e-3)
        assert grid.tol_grid < 1e-3

    def test_refined_halves_spacing(self):
        """refined() keeps the radius and halves the spacing"""
        grid = VelocityGrid(radius=3.0, spacing=1.0).refined()

        assert grid.spacing == 0.5
        assert grid.n_axis == 13

    def test_empty_grid_rejected(self):
        """Spacing larger than the radius leaves no lattice"""
        with pytest.raises(KineticException) as exc_info:
            VelocityGrid(radius=0.5, spacing=1.0)

        assert exc_info.value.error_code == "invalid_input"

    def test_non_positive_spacing_rejected(self):
        """Spacing must be positive"""
        with pytest.raises(KineticException):
            VelocityGrid(radius=1.0, spacing=0.0)

    def test_grids_are_hashable_by_value(self):
        """Equal parameters give equal hashes, so grids key caches"""
        assert hash(VelocityGrid(2.0, 1.0)) == hash(VelocityGrid(2.0, 1.0))
        assert VelocityGrid(2.0, 1.0) == VelocityGrid(2.0, 1.0)

    def test_describe(self):
        """describe() reports the lattice and its Maxwellian mass error"""
        info = VelocityGrid(radius=2.0, spacing=1.0).describe()

        assert info["size"] == 125
        assert info["tol_grid"] == pytest.approx(abs(info["mu_mass"] - 1.0))


class TestWeightSpec:
    """Tests for WeightSpec validation"""

    def test_defaults_are_valid(self):
        """Default weight satisfies the theorem-mode ranges"""
        assert WeightSpec().violations() == []

    def test_varpi_above_theorem_range(self):
        """varpi = 0.05 is rejected in theorem mode and accepted outside it"""
        spec = WeightSpec(varpi=0.05)

        assert any("varpi" in problem for problem in spec.violations(theorem_mode=True))
        assert spec.violations(theorem_mode=False) == []

    def test_validate_raises_with_all_problems(self):
        """validate() joins every violation"""
        with pytest.raises(KineticException) as exc_info:
            WeightSpec(rho=0.5, beta=1.0).validate()

        assert "rho" in exc_info.value.message
        assert "beta" in exc_info.value.message
