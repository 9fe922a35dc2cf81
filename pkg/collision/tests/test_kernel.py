"""
Tests for the collision kernel, its sphere rule and the lattice interpolation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collision.kernel import AngularQuadrature, KernelSpec, kernel_envelope
from collision.lattice import interpolate, pad, padded_size, trilinear_stencil, unpad
from core.exceptions import KineticException
from core.rng import make_stream
from velocity.grid import VelocityGrid

GRID = VelocityGrid(radius=2.0, spacing=1.0)
coordinate = st.floats(min_value=-4.0, max_value=4.0, allow_nan=False)


class TestAngularQuadrature:
    """Tests for AngularQuadrature"""

    def test_weights_cover_sphere(self):
        """Solid-angle weights sum to 4 pi"""
        q = AngularQuadrature()

        assert q.size == 32
        assert q.weights.sum() == pytest.approx(4.0 * math.pi, rel=1e-13)

    def test_integrates_abs_cos(self):
        """sum w |cos theta| = 2 pi"""
        q = AngularQuadrature(n_polar=3, n_azimuth=5)

        assert np.sum(q.weights * q.cos_theta) == pytest.approx(2.0 * math.pi, rel=1e-13)

    def test_nodes_on_upper_hemisphere(self):
        """cos theta lies in (0, 1]"""
        q = AngularQuadrature()

        assert np.all(q.cos_theta > 0.0)
        assert np.all(q.cos_theta <= 1.0)
        assert np.allclose(q.cos_theta**2 + q.sin_theta**2, 1.0)


class TestKernelSpec:
    """Tests for KernelSpec"""

    def test_angular_total(self):
        """angular_total = 2 pi b0"""
        assert KernelSpec(b0=0.5).angular_total == pytest.approx(math.pi)

    def test_kappa_out_of_range(self):
        """kappa = 1.5 violates [0, 1]"""
        with pytest.raises(KineticException) as exc_info:
            KernelSpec(kappa=1.5).validate()

        assert exc_info.value.error_code == "invalid_input"

    def test_zero_power_is_one(self):
        """kappa = 0 gives a unit cross section, also at zero relative speed"""
        assert np.array_equal(KernelSpec(kappa=0.0).cross_section([0.0, 2.0]), [1.0, 1.0])


class TestKernelEnvelope:
    """Tests for kernel_envelope"""

    def test_unit_distance_equal_speeds(self):
        """|v - eta| = 1 with |v| = |eta| gives 2 e^(-1/8)"""
        value = kernel_envelope([0.5, 0.5, 0.0], [0.5, -0.5, 0.0])

        assert value == pytest.approx(2.0 * math.exp(-0.125), rel=1e-12)
        assert value == pytest.approx(1.7650, abs=1e-4)

    def test_decays_at_large_distance(self):
        """|v - eta| = 10 along |v| = |eta| gives (10 + 0.1) e^(-12.5)"""
        value = kernel_envelope([5.0, 0.0, 0.0], [-5.0, 0.0, 0.0])

        assert value == pytest.approx(3.77e-5, rel=1e-2)

    @given(coordinate, coordinate, coordinate, coordinate)
    @settings(max_examples=50)
    def test_swap_symmetric(self, a, b, c, d):
        """envelope(v, eta) = envelope(eta, v)"""
        v = np.array([a, b, 0.1])
        eta = np.array([c, d, -0.2])

        assert kernel_envelope(v, eta) == pytest.approx(kernel_envelope(eta, v), rel=1e-12)

    def test_singular_at_coincidence(self):
        """v = eta is rejected"""
        with pytest.raises(KineticException) as exc_info:
            kernel_envelope([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])

        assert exc_info.value.error_code == "singular_input"


class TestLattice:
    """Tests for the trilinear stencil"""

    def test_exact_at_nodes(self):
        """Interpolating at the nodes returns the lattice values"""
        values = np.arange(GRID.size, dtype=float)

        assert np.allclose(interpolate(GRID, values, GRID.nodes), values, rtol=0, atol=1e-12)

    def test_linear_functions_reproduced(self):
        """Trilinear interpolation is exact for affine functions inside the cube"""
        values = GRID.nodes @ np.array([1.0, -2.0, 0.5]) + 3.0
        point = np.array([[0.3, -0.7, 1.2]])

        assert interpolate(GRID, values, point)[0] == pytest.approx(0.3 + 1.4 + 0.6 + 3.0)

    def test_zero_far_outside(self):
        """Points beyond the pad ring read zero"""
        values = np.ones(GRID.size)

        assert interpolate(GRID, values, np.array([[10.0, 0.0, 0.0]]))[0] == 0.0

    def test_pad_unpad_inverse(self):
        """unpad(pad(x)) = x"""
        values = make_stream(0).random((2, GRID.size))

        assert np.array_equal(unpad(GRID, pad(GRID, values)), values)

    def test_scatter_is_transpose_of_gather(self):
        """<gather(a), b> = <a, scatter(b)> for one stencil"""
        rng = make_stream(1)
        points = rng.uniform(-2.5, 2.5, size=(20, 3))
        stencil = trilinear_stencil(GRID, points)
        a = pad(GRID, rng.random(GRID.size))
        b = rng.random(20)

        lhs = float(stencil.gather(a)[0] @ b)
        rhs = float(a[0] @ stencil.scatter(b, padded_size(GRID)))

        assert lhs == pytest.approx(rhs, rel=1e-12)
