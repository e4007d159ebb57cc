"""
Tests for the singular functions of the reentrant corner and the
integrals built on them.
"""

import math
import unittest

import numpy as np
import pytest
from scipy import integrate

from models.fem_models import NodalField, SingularExponent
from models.error_models import QuadratureAccuracyError, SingularEvaluationError
from services.mesh_service import build_initial_mesh, uniform_refine
from services.singular_service import (
    eval_primal, eval_dual, primal_gradient, normal_derivative_primal, dual_quadrature_exponent,
    singular_volume_quadrature, checked_singular_quadrature, singular_load, volume_inner_products,
    pairing_partition, boundary_singular_pairing
)


S270 = SingularExponent.from_degrees(270)


def square_radius(theta):
    """Distance from the origin to the boundary of [-1, 1]^2 in direction theta."""
    return 1.0 / max(abs(math.cos(theta)), abs(math.sin(theta)))


def sector_integral(s, radial_power, angular):
    """∫_Ω r^radial_power angular(θ) dA, computed in polar coordinates."""
    def integrand(theta):
        exponent = radial_power + 2.0
        return angular(theta) * square_radius(theta) ** exponent / exponent

    breaks = [k * math.pi / 4 for k in range(1, 8) if k * math.pi / 4 < s.omega]
    value, _ = integrate.quad(integrand, 0.0, s.omega, points=breaks, limit=200, epsabs=1e-13)
    return value


@pytest.fixture(scope="module")
def mesh():
    return uniform_refine(build_initial_mesh(S270.omega), 4)


class TestSingularExponent(unittest.TestCase):
    """Test SingularExponent."""

    def test_pacman(self):
        self.assertAlmostEqual(S270.lam, 2.0 / 3.0, places=15)
        self.assertAlmostEqual(S270.optimal_grading, 1.0 / 3.0, places=15)

    def test_invalid_angle(self):
        for omega in (0.0, -1.0, 2.0 * math.pi):
            with self.assertRaises(ValueError):
                SingularExponent(omega)


class TestPointEvaluation:
    """Test the point evaluations."""

    def test_known_values(self):
        assert eval_primal(S270, np.array([[0.0, 1.0]]))[0] == pytest.approx(math.sqrt(3) / 2, rel=1e-14)
        assert eval_dual(S270, np.array([[0.0, 2.0]]))[0] == pytest.approx(
            2 ** (-2.0 / 3.0) * math.sqrt(3) / 2, rel=1e-14)

    def test_zero_on_both_rays(self):
        points = np.array([[0.5, 0.0], [1.0, 0.0], [0.0, -0.5], [0.0, -1.0]])

        np.testing.assert_allclose(eval_primal(S270, points), 0.0, atol=1e-15)
        np.testing.assert_allclose(eval_dual(S270, points), 0.0, atol=1e-15)

    def test_primal_vanishes_at_origin(self):
        assert eval_primal(S270, np.zeros((1, 2)))[0] == 0.0

    def test_homogeneity(self):
        points = np.array([[0.3, 0.4], [-0.7, 0.2], [-0.5, -0.5]])
        t = 0.25

        np.testing.assert_allclose(eval_primal(S270, t * points), t ** S270.lam * eval_primal(S270, points),
                                   rtol=1e-13)
        np.testing.assert_allclose(eval_dual(S270, t * points), t ** (-S270.lam) * eval_dual(S270, points),
                                   rtol=1e-13)

    def test_dual_at_origin(self):
        with pytest.raises(SingularEvaluationError):
            eval_dual(S270, np.array([[0.5, 0.5], [0.0, 0.0]]))

    def test_gradient_matches_finite_differences(self):
        p = np.array([[-0.4, 0.3]])
        eps = 1e-6
        fd = [(eval_primal(S270, p + eps * e) - eval_primal(S270, p - eps * e))[0] / (2 * eps)
              for e in (np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))]

        np.testing.assert_allclose(primal_gradient(S270, p)[0], fd, rtol=1e-7)

    def test_normal_derivative_on_rays(self):
        r = np.array([0.1, 0.5, 1.0])
        on_first = np.stack([r, np.zeros(3)], axis=-1)
        on_second = np.stack([np.zeros(3), -r], axis=-1)
        expected = -S270.lam * r ** (S270.lam - 1.0)

        np.testing.assert_allclose(
            normal_derivative_primal(S270, on_first, np.tile([0.0, -1.0], (3, 1))), expected, rtol=1e-13)
        np.testing.assert_allclose(
            normal_derivative_primal(S270, on_second, np.tile([1.0, 0.0], (3, 1))), expected, rtol=1e-13)


class TestVolumeIntegrals:
    """Volume integrals of the dual singular function against sector oracles."""

    def test_quadrature_exponent(self):
        assert dual_quadrature_exponent(S270) == pytest.approx(-1.0 / 3.0)
        assert dual_quadrature_exponent(SingularExponent(0.5 * math.pi)) == 0.0

    def test_norm_and_mean(self, mesh):
        lam = S270.lam
        norm_exact = sector_integral(S270, -2 * lam, lambda t: math.sin(lam * t) ** 2)
        mean_exact = sector_integral(S270, -lam, lambda t: math.sin(lam * t))
        ones = NodalField(mesh, np.ones(mesh.n_vertices))

        pairing, norm_sq = volume_inner_products(mesh, ones, S270)

        assert norm_sq == pytest.approx(norm_exact, rel=1e-3)
        assert pairing == pytest.approx(mean_exact, rel=1e-3)

    def test_depth_converged(self, mesh):
        ones = NodalField(mesh, np.ones(mesh.n_vertices))

        shallow = volume_inner_products(mesh, ones, S270, depth=16)
        deep = volume_inner_products(mesh, ones, S270, depth=18)

        np.testing.assert_allclose(shallow, deep, rtol=1e-6)

    def test_singular_load_is_consistent(self, mesh):
        quad = singular_volume_quadrature(mesh, S270)
        ones = NodalField(mesh, np.ones(mesh.n_vertices))

        load, norm_sq = singular_load(S270, quad)
        pairing, norm_again = volume_inner_products(mesh, ones, S270, quad=quad)

        assert load.shape == (mesh.n_vertices,)
        assert load.sum() == pytest.approx(pairing, rel=1e-12)
        assert norm_sq == pytest.approx(norm_again, rel=1e-14)

    def test_shallow_quadrature_fails_depth_doubling(self, mesh):
        ones = NodalField(mesh, np.ones(mesh.n_vertices))

        with pytest.raises(QuadratureAccuracyError) as exc_info:
            volume_inner_products(mesh, ones, S270, depth=1, corner_points=2, check_tolerance=1e-12)

        assert exc_info.value.data['relative_change'] > 1e-12
        assert exc_info.value.data['tolerance'] == 1e-12
        assert volume_inner_products(mesh, ones, S270, depth=1, corner_points=2,
                                     check_tolerance=None)[1] > 0.0

    def test_checked_quadrature(self, mesh):
        quad = checked_singular_quadrature(mesh, S270)

        load, _ = singular_load(S270, quad)
        np.testing.assert_allclose(load, singular_load(S270, singular_volume_quadrature(mesh, S270))[0],
                                   rtol=1e-14)
        with pytest.raises(QuadratureAccuracyError, match="depth doubling"):
            checked_singular_quadrature(mesh, S270, depth=1, corner_points=2, check_tolerance=1e-12)

    def test_convex_corner_rejected(self):
        s = SingularExponent(0.5 * math.pi)
        mesh = build_initial_mesh(s.omega)

        with pytest.raises(ValueError, match="not square integrable"):
            volume_inner_products(mesh, NodalField(mesh, np.zeros(mesh.n_vertices)), s)


class TestBoundaryPairing:
    """Test the graded boundary pairing."""

    def test_partition_covers_boundary(self):
        points, lengths, normals = pairing_partition(S270, radius=0.1, mu_q=1.0 / 3.0, h_q=0.01)

        assert lengths.sum() == pytest.approx(8.0, rel=1e-13)
        assert (lengths > 0.0).all()
        np.testing.assert_allclose(np.linalg.norm(normals, axis=1), 1.0, rtol=1e-14)
        assert np.linalg.norm(points, axis=1).min() < 1e-6

    def test_partition_is_graded(self):
        points, lengths, _ = pairing_partition(S270, radius=0.1, mu_q=1.0 / 3.0, h_q=0.01)
        r = np.linalg.norm(points, axis=1)

        assert lengths[r < 1e-3].max() < lengths[r > 0.2].min()

    @pytest.mark.parametrize("radius,mu_q,h_q", [(0.1, 0.0, 0.01), (0.1, 1.5, 0.01),
                                                  (0.0, 0.5, 0.01), (0.1, 0.5, -1.0)])
    def test_invalid_parameters(self, radius, mu_q, h_q):
        with pytest.raises(ValueError):
            pairing_partition(S270, radius, mu_q, h_q)

    def test_flux_of_harmonic_function_vanishes(self):
        def one(x1, x2):
            return np.ones_like(x1)

        assert abs(boundary_singular_pairing(one, S270, h_q=0.002)) < 1e-4

    def test_green_identity(self):
        """(x1, ∂_n s)_Γ = (∂_n x1, s)_Γ for the harmonic pair x1 and s."""
        def x1(a, b):
            return a

        points, lengths, normals = pairing_partition(S270, radius=0.1, mu_q=1.0 / 3.0, h_q=0.002)
        other_side = float(np.sum(lengths * normals[:, 0] * eval_primal(S270, points)))

        assert boundary_singular_pairing(x1, S270, h_q=0.002) == pytest.approx(other_side, abs=1e-4)
