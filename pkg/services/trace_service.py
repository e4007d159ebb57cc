"""
Regularization of L²(Γ) Dirichlet data into the discrete trace space.

Two regularizations are available: the L²(Γ)-projection Π_h and the
Carstensen quasi-interpolant C_h with nodal functionals
π_x(u) = (u, λ_x)_Γ / (1, λ_x)_Γ. Both use the same boundary quadrature,
which splits the edges at the origin geometrically since the datum may
blow up like r^{−1/2+ε} there.
"""

from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve

from models.mesh_models import Mesh
from models.fem_models import TraceField
from .logging_service import get_logger
from .performance_monitor import track_stage
from .quadrature_rules import BoundaryQuadrature, build_boundary_quadrature
from .fem_service import cg_solve


logger = get_logger(__name__)

BoundaryFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

# boundary systems up to this size are factored densely
DENSE_LIMIT = 4000


def boundary_mass(mesh: Mesh) -> sp.csr_matrix:
    """Gram matrix (λ_x, λ_y)_Γ of the boundary hat functions, in loop order."""
    pos = mesh.boundary_position[mesh.boundary_edges]
    lengths = mesh.boundary_lengths
    local = lengths[:, None, None] * (np.ones((2, 2)) + np.eye(2))[None] / 6.0
    rows = np.repeat(pos, 2, axis=1).ravel()
    cols = np.tile(pos, (1, 2)).ravel()
    n = len(mesh.boundary_vertices)
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _boundary_load(u: BoundaryFunction, quad: BoundaryQuadrature) -> np.ndarray:
    values = np.asarray(u(quad.points[:, 0], quad.points[:, 1]), dtype=float)
    return quad.hat_pairing(values)


def l2_project_trace(u: BoundaryFunction, mesh: Mesh, quad: Optional[BoundaryQuadrature] = None,
                     tol: float = 1e-12) -> TraceField:
    """
    Π_h u: solve M_Γ c = b with b_x = (u, λ_x)_Γ.

    Args:
        u: vectorized boundary datum u(x1, x2)
        mesh: mesh whose boundary carries the trace
        quad: boundary quadrature (built with default parameters when omitted)
        tol: relative tolerance of the iterative path for large boundaries
    """
    quad = quad or build_boundary_quadrature(mesh)
    with track_stage(__name__, "l2_project_trace",
                     extra_data={'boundary_vertices': int(len(mesh.boundary_vertices))}) as info:
        load = _boundary_load(u, quad)
        gram = boundary_mass(mesh)
        if gram.shape[0] <= DENSE_LIMIT:
            coefficients = cho_solve(cho_factor(gram.toarray()), load)
            info['path'] = 'dense'
        else:
            coefficients = cg_solve(gram, load, tol)
            info['path'] = 'cg'
    return TraceField(mesh, coefficients)


def carstensen_trace(u: BoundaryFunction, mesh: Mesh,
                     quad: Optional[BoundaryQuadrature] = None) -> TraceField:
    """
    C_h u with π_x(u) = (u, λ_x)_Γ / (1, λ_x)_Γ.

    Numerator and denominator use the same quadrature, so data with values
    in [a, b] give coefficients in [a, b].
    """
    quad = quad or build_boundary_quadrature(mesh)
    with track_stage(__name__, "carstensen_trace",
                     extra_data={'boundary_vertices': int(len(mesh.boundary_vertices))}):
        numerator = _boundary_load(u, quad)
        denominator = quad.hat_pairing(np.ones(len(quad.weights)))
        return TraceField(mesh, numerator / denominator)


def regularize_trace(u: BoundaryFunction, mesh: Mesh, method: str = "l2proj",
                     quad: Optional[BoundaryQuadrature] = None) -> TraceField:
    """Dispatch on the configured regularization ('l2proj' or 'carstensen')."""
    if method == "l2proj":
        return l2_project_trace(u, mesh, quad)
    if method == "carstensen":
        return carstensen_trace(u, mesh, quad)
    raise ValueError(f"Unknown regularization: {method}")


def trace_norm(trace: TraceField) -> float:
    """‖u^h‖_{L²(Γ)}."""
    return float(np.sqrt(trace.values @ (boundary_mass(trace.mesh) @ trace.values)))
