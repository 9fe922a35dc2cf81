"""
Tests for the convex domains and the domain factory.

Tests cover:
- Exit times on the unit ball and the slab
- Boundary classification and projection
- Domain selection by name and settings default
- Domain registration
"""

import numpy as np
import pytest
from unittest.mock import patch
from django.conf import settings

from core.exceptions import KineticException
from geometry.domains import BaseDomain, get_domain, list_available_domains, register_domain
from geometry.domains.factory import DOMAIN_REGISTRY
from geometry.domains.slab import Slab
from geometry.domains.unit_ball import UnitBall


class TestUnitBall:
    """Tests for the unit ball"""

    def test_exit_time_along_axis(self):
        """Backward ray from (0.5, 0, 0) along +x leaves through (-1, 0, 0)"""
        t_b, x_b = UnitBall().exit_time(np.array([0.5, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))

        assert float(t_b) == pytest.approx(1.5)
        assert np.allclose(x_b, [-1.0, 0.0, 0.0])

    def test_exit_time_scales_with_speed(self):
        """From the centre at speed 2 the exit takes half a unit of time"""
        t_b, x_b = UnitBall().exit_time(np.zeros(3), np.array([0.0, 2.0, 0.0]))

        assert float(t_b) == pytest.approx(0.5)
        assert np.allclose(x_b, [0.0, -1.0, 0.0])

    def test_boundary_start_outgoing_is_nonnegative(self):
        """A boundary point whose backward ray enters the ball gets the full chord"""
        t_b, _ = UnitBall().exit_time(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))

        assert float(t_b) == pytest.approx(2.0)

    def test_vectorised_exit(self):
        """Batched points give the same exits as single calls"""
        ball = UnitBall()
        x = np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.0]])
        v = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])

        t_b, _ = ball.exit_time(x, v)

        assert np.allclose(t_b, [1.5, 0.5])

    def test_boundary_classification(self):
        """Points are classified against the level set with a small tolerance"""
        ball = UnitBall()

        assert ball.on_boundary(np.array([1.0, 0.0, 0.0]))
        assert ball.on_boundary(np.array([0.0, 0.0, 1.0 + 1e-12]))
        assert ball.is_inside(np.array([0.3, 0.3, 0.3]))
        assert not ball.in_closure(np.array([1.1, 0.0, 0.0]))

    def test_projection_is_radial(self):
        """Projection moves a point to the nearest sphere point"""
        projected = UnitBall().project_to_boundary(np.array([0.0, 3.0, 4.0]))

        assert np.allclose(projected, [0.0, 0.6, 0.8])

    def test_describe(self):
        """Description carries shape and convexity constant"""
        assert UnitBall().describe() == {"shape": "unit_ball", "convexity_constant": 2.0}


class TestSlab:
    """Tests for the slab"""

    def test_exit_time_through_right_wall(self):
        """x1 = 0.2 with v1 = -0.6 reaches x1 = 1 after 4/3"""
        t_b, x_b = Slab(1.0).exit_time(np.array([0.2, 0.5, -0.5]), np.array([-0.6, 0.3, 0.0]))

        assert float(t_b) == pytest.approx(4.0 / 3.0)
        assert x_b[0] == 1.0
        assert x_b[1] == pytest.approx(0.5 - 0.3 * 4.0 / 3.0)

    def test_exit_time_through_left_wall(self):
        """Positive v1 exits through x1 = -h"""
        t_b, x_b = Slab(2.0).exit_time(np.array([1.0, 0.0, 0.0]), np.array([1.5, 0.0, 0.0]))

        assert float(t_b) == pytest.approx(2.0)
        assert x_b[0] == -2.0

    def test_parallel_velocity_never_exits(self):
        """v1 = 0 gives an infinite exit time and no exit point"""
        t_b, x_b = Slab(1.0).exit_time(np.array([0.2, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))

        assert np.isinf(t_b)
        assert np.all(np.isnan(x_b))

    def test_normal_and_projection(self):
        """Walls have normals +-e1 and projection snaps x1 to the nearest wall"""
        slab = Slab(1.0)

        assert np.allclose(slab.normal(np.array([1.0, 0.0, 0.0])), [1.0, 0.0, 0.0])
        assert np.allclose(slab.normal(np.array([-1.0, 0.0, 0.0])), [-1.0, 0.0, 0.0])
        assert np.allclose(slab.project_to_boundary(np.array([-0.999, 2.0, 3.0])), [-1.0, 2.0, 3.0])

    def test_describe_includes_half_width(self):
        """Slab description records its half width"""
        info = Slab(0.5).describe()

        assert info["shape"] == "slab"
        assert info["half_width"] == 0.5
        assert info["convexity_constant"] == 0.0


class TestGetDomain:
    """Tests for get_domain function"""

    def test_get_unit_ball_explicit(self):
        """Test getting the unit ball by name"""
        domain = get_domain('unit_ball')

        assert isinstance(domain, UnitBall)

    def test_get_domain_case_and_whitespace(self):
        """Test domain name is case-insensitive and trimmed"""
        domain = get_domain('  SLAB ', half_width=0.5)

        assert isinstance(domain, Slab)
        assert domain.half_width == 0.5

    @patch.object(settings, 'KINETIC_DEFAULT_DOMAIN', 'unit_ball')
    def test_get_domain_uses_default(self):
        """Test getting a domain without a name uses the settings default"""
        domain = get_domain()

        assert isinstance(domain, UnitBall)

    def test_get_unsupported_domain(self):
        """Test error when requesting an unknown shape"""
        with pytest.raises(KineticException) as exc_info:
            get_domain('torus')

        assert exc_info.value.error_code == 'unsupported_domain'
        assert 'torus' in exc_info.value.message

    def test_slab_rejects_nonpositive_half_width(self):
        """Test slab parameters are validated"""
        with pytest.raises(KineticException) as exc_info:
            get_domain('slab', half_width=0.0)

        assert exc_info.value.error_code == 'invalid_input'

    def test_unexpected_parameters_rejected(self):
        """Test unknown constructor parameters raise invalid_input"""
        with pytest.raises(KineticException) as exc_info:
            get_domain('unit_ball', radius=2.0)

        assert exc_info.value.error_code == 'invalid_input'


class TestRegisterDomain:
    """Tests for register_domain function"""

    def test_register_new_domain(self):
        """Test registering a new shape"""
        class Cube(Slab):
            name = "cube"

        with patch.dict(DOMAIN_REGISTRY):
            register_domain('Cube', Cube)

            assert 'cube' in list_available_domains()
            assert isinstance(get_domain('cube'), Cube)

        assert 'cube' not in list_available_domains()

    def test_register_invalid_domain_class(self):
        """Test registering a class that doesn't inherit from BaseDomain"""
        class NotADomain:
            pass

        with pytest.raises(ValueError) as exc_info:
            register_domain('bad', NotADomain)

        assert 'must inherit from BaseDomain' in str(exc_info.value)

    def test_registry_entries_are_domains(self):
        """Every registered shape is a BaseDomain"""
        assert set(list_available_domains()) >= {'unit_ball', 'slab'}
        assert all(issubclass(cls, BaseDomain) for cls in DOMAIN_REGISTRY.values())
