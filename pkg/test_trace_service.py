"""
Tests for the regularization of L2 boundary data: the boundary Gram
matrix, the L2(Γ)-projection and the Carstensen quasi-interpolant.
"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from services.mesh_service import build_initial_mesh, polar_of, refine_to_graded, uniform_refine
from services.quadrature_rules import build_boundary_quadrature
from services.trace_service import (
    boundary_mass, l2_project_trace, carstensen_trace, regularize_trace, trace_norm
)
from models.mesh_models import GradingParams


OMEGA = 1.5 * math.pi


def singular_datum(exponent=0.4999, omega=OMEGA):
    def u(x1, x2):
        r, theta = polar_of(np.stack([x1, x2], axis=-1), omega)
        return r ** (-exponent) * np.sin(-exponent * theta)
    return u


def constant(value):
    return lambda x1, x2: np.full_like(np.asarray(x1, dtype=float), value)


@pytest.fixture(scope="module")
def mesh():
    return uniform_refine(build_initial_mesh(OMEGA), 4)


class TestBoundaryMass:
    """Test the Gram matrix of the boundary hat functions."""

    def test_total_is_boundary_length(self, mesh):
        G = boundary_mass(mesh)
        ones = np.ones(G.shape[0])

        assert ones @ (G @ ones) == pytest.approx(8.0, rel=1e-14)
        assert G.shape == (len(mesh.boundary_vertices),) * 2

    def test_symmetric_positive_definite(self, mesh):
        G = boundary_mass(mesh).toarray()

        np.testing.assert_allclose(G, G.T, atol=1e-15)
        assert np.linalg.eigvalsh(G).min() > 0.0

    def test_matches_boundary_quadrature(self, mesh):
        quad = build_boundary_quadrature(mesh)
        x = np.random.default_rng(0).standard_normal(len(mesh.boundary_vertices))

        values = quad.interpolate(x)

        assert quad.integrate(values * values) == pytest.approx(x @ (boundary_mass(mesh) @ x), rel=1e-12)


class TestL2Projection:
    """Test the L2(Γ)-projection."""

    def test_constant(self, mesh):
        trace = l2_project_trace(constant(2.5), mesh)

        np.testing.assert_allclose(trace.values, 2.5, rtol=1e-12)

    def test_piecewise_affine_is_reproduced(self, mesh):
        def affine(x1, x2):
            return 0.5 + 2.0 * x1 - x2

        trace = l2_project_trace(affine, mesh)

        p = mesh.vertices[mesh.boundary_vertices]
        np.testing.assert_allclose(trace.values, affine(p[:, 0], p[:, 1]), atol=1e-12)

    def test_residual_orthogonal_to_hats(self, mesh):
        u = singular_datum()
        quad = build_boundary_quadrature(mesh)

        trace = l2_project_trace(u, mesh, quad)

        load = quad.hat_pairing(u(quad.points[:, 0], quad.points[:, 1]))
        residual = load - boundary_mass(mesh) @ trace.values
        assert np.abs(residual).max() < 1e-12 * np.abs(load).max()

    def test_stability(self, mesh):
        u = singular_datum()
        quad = build_boundary_quadrature(mesh)
        values = u(quad.points[:, 0], quad.points[:, 1])

        trace = l2_project_trace(u, mesh, quad)

        assert trace_norm(trace) <= math.sqrt(quad.integrate(values * values)) * (1 + 1e-12)

    def test_iterative_path_matches_dense(self, mesh):
        u = singular_datum()
        dense = l2_project_trace(u, mesh)

        with patch('services.trace_service.DENSE_LIMIT', 0):
            iterative = l2_project_trace(u, mesh, tol=1e-12)

        np.testing.assert_allclose(iterative.values, dense.values, rtol=1e-7, atol=1e-9)

    def test_graded_boundary(self):
        graded = refine_to_graded(build_initial_mesh(OMEGA), GradingParams(mu=0.333, h=0.25))

        u = singular_datum()
        quad = build_boundary_quadrature(graded)
        values = u(quad.points[:, 0], quad.points[:, 1])

        trace = l2_project_trace(u, graded, quad)

        assert np.isfinite(trace.values).all()
        assert trace_norm(trace) <= math.sqrt(quad.integrate(values * values)) * (1 + 1e-12)


class TestCarstensen:
    """Test the Carstensen quasi-interpolant."""

    def test_constant(self, mesh):
        np.testing.assert_allclose(carstensen_trace(constant(-1.5), mesh).values, -1.5, rtol=1e-13)

    def test_range_preserved(self, mesh):
        def bounded(x1, x2):
            return 0.5 * (1.0 + np.sin(7.0 * x1 + 3.0 * x2))

        values = carstensen_trace(bounded, mesh).values

        assert values.min() >= -1e-15
        assert values.max() <= 1.0 + 1e-15

    def test_not_a_projection(self, mesh):
        p = mesh.vertices[mesh.boundary_vertices]

        values = carstensen_trace(lambda x1, x2: x1, mesh).values

        assert not np.allclose(values, p[:, 0])

    def test_sign_of_singular_datum(self, mesh):
        values = carstensen_trace(singular_datum(), mesh).values

        # r^-a sin(-a theta) <= 0 on the whole boundary
        assert values.max() <= 1e-15


class TestDispatch:
    """Test regularize_trace."""

    def test_methods(self, mesh):
        u = singular_datum()
        quad = build_boundary_quadrature(mesh)

        np.testing.assert_array_equal(regularize_trace(u, mesh, "l2proj", quad).values,
                                      l2_project_trace(u, mesh, quad).values)
        np.testing.assert_array_equal(regularize_trace(u, mesh, "carstensen", quad).values,
                                      carstensen_trace(u, mesh, quad).values)

    def test_unknown_method(self, mesh):
        with pytest.raises(ValueError, match="Unknown regularization"):
            regularize_trace(constant(1.0), mesh, "nodal")
