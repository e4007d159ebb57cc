"""
P1 finite element service.

Assembles stiffness and mass matrices, builds the nodal lifting of a
boundary trace and solves the Dirichlet problem by the homogenized split
y_h = y_fh + B̃_h u^h + ỹ_0h with a Jacobi-preconditioned conjugate
gradient on the interior unknowns.
"""

from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from models.mesh_models import Mesh
from models.fem_models import NodalField, TraceField
from models.error_models import AssemblyError, SolverConvergenceError, TraceMismatchError
from .logging_service import get_logger
from .performance_monitor import track_stage
from .quadrature_rules import build_source_quadrature


logger = get_logger(__name__)

SourceFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

_LOCAL_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0


def _check_areas(mesh: Mesh) -> np.ndarray:
    areas = mesh.signed_areas
    bad = np.flatnonzero(areas <= 0.0)
    if bad.size:
        raise AssemblyError(
            f"Degenerate triangle {int(bad[0])} (signed area {areas[bad[0]]:.3e})",
            {'triangle': int(bad[0]), 'count': int(bad.size)}
        )
    return areas


def _scatter(mesh: Mesh, local: np.ndarray) -> sp.csr_matrix:
    """Sum (M, 3, 3) element matrices into an (N, N) csr matrix."""
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """
    (∇λ_i, ∇λ_j)_Ω for all vertex pairs.

    Raises:
        AssemblyError: on a triangle with non-positive area
    """
    with track_stage(__name__, "assemble_stiffness", extra_data=mesh.summary()):
        areas = _check_areas(mesh)
        p = mesh.vertices[mesh.triangles]
        # edge opposite local vertex k, rotated gives area-scaled gradients
        e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
        local = np.einsum('mid,mjd->mij', e, e) / (4.0 * areas[:, None, None])
        return _scatter(mesh, local)


def assemble_mass(mesh: Mesh) -> sp.csr_matrix:
    """(λ_i, λ_j)_Ω for all vertex pairs."""
    with track_stage(__name__, "assemble_mass", extra_data=mesh.summary()):
        areas = _check_areas(mesh)
        return _scatter(mesh, areas[:, None, None] * _LOCAL_MASS[None, :, :])


def lifting(mesh: Mesh, trace: TraceField) -> NodalField:
    """B̃_h u^h: trace values at boundary vertices, zero inside."""
    if len(trace.values) != len(mesh.boundary_vertices):
        raise TraceMismatchError("Trace does not belong to this mesh",
                                 {'length': int(len(trace.values)),
                                  'boundary_vertices': int(len(mesh.boundary_vertices))})
    values = np.zeros(mesh.n_vertices)
    values[mesh.boundary_vertices] = trace.values
    return NodalField(mesh, values)


def source_load(mesh: Mesh, f: Optional[SourceFunction]) -> np.ndarray:
    """(f, λ_x)_Ω for every vertex with the 3-point rule; zeros when f is None."""
    if f is None:
        return np.zeros(mesh.n_vertices)
    quad = build_source_quadrature(mesh)
    values = np.asarray(f(quad.points[:, 0], quad.points[:, 1]), dtype=float)
    return quad.hat_pairing(values)


def _backward_error(A: sp.spmatrix, x: np.ndarray, b: np.ndarray, r: np.ndarray) -> float:
    """max_i |r_i| / (|A||x| + |b|)_i, the componentwise relative residual."""
    scale = abs(A) @ np.abs(x) + np.abs(b)
    floor = np.finfo(float).eps * scale.max()
    if floor == 0.0:
        return 0.0
    return float(np.max(np.abs(r) / np.maximum(scale, floor)))


def cg_solve(A: sp.spmatrix, b: np.ndarray, tol: float = 1e-10,
             maxit: Optional[int] = None, max_refinements: int = 6) -> np.ndarray:
    """
    Jacobi-preconditioned conjugate gradient with iterative refinement.

    The first CG pass stops at ‖b − Ax‖ ≤ tol·‖b‖. When the entries of b
    span many orders of magnitude that leaves rows with O(1) data
    unconverged, so the residual is recomputed and corrected by further CG
    passes until its componentwise relative size
    max_i |r_i| / (|A||x| + |b|)_i drops below ``tol`` or stops shrinking.

    Raises:
        SolverConvergenceError: after ``maxit`` iterations (default 10·n) in any pass
    """
    n = A.shape[0]
    b = np.asarray(b, dtype=float)
    if n == 0 or not np.any(b):
        return np.zeros(n)
    maxit = maxit or 10 * n

    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SolverConvergenceError("Matrix has non-positive diagonal entries",
                                     {'size': int(n)})
    preconditioner = LinearOperator((n, n), matvec=lambda r: r / diag, dtype=float)

    iterations = [0]

    def count(_):
        iterations[0] += 1

    def run(rhs: np.ndarray) -> np.ndarray:
        start = iterations[0]
        d, status = cg(A, rhs, rtol=tol, atol=0.0, maxiter=maxit, M=preconditioner, callback=count)
        if status != 0:
            residual = float(np.linalg.norm(rhs - A @ d) / np.linalg.norm(rhs))
            raise SolverConvergenceError(
                f"CG did not converge in {maxit} iterations",
                {'iterations': iterations[0] - start, 'relative_residual': residual, 'size': int(n)}
            )
        return d

    with track_stage(__name__, "cg_solve", extra_data={'size': int(n)}) as info:
        x = run(b)
        r = b - A @ x
        error = _backward_error(A, x, b, r)
        refinements = 0
        while error > tol and refinements < max_refinements and np.any(r):
            x = x + run(r)
            r = b - A @ x
            previous, error = error, _backward_error(A, x, b, r)
            refinements += 1
            # rounding in rows with huge |x| bounds what refinement can reach
            if error > 0.1 * previous:
                break
        if error > tol:
            logger.warning("CG refinement stopped above the componentwise tolerance", extra={
                'extra_data': {'backward_error': error, 'tol': tol, 'refinements': refinements}
            })
        info.update({'iterations': iterations[0], 'refinements': refinements,
                     'relative_residual': float(np.linalg.norm(r) / np.linalg.norm(b)),
                     'backward_error': error})
    return x


def solve_interior(mesh: Mesh, A: sp.csr_matrix, load: np.ndarray, tol: float,
                   maxit_factor: int = 10) -> np.ndarray:
    """Solve A_II x_I = load_I; returns a vertex vector vanishing on the boundary."""
    interior = mesh.interior_vertices
    values = np.zeros(mesh.n_vertices)
    if interior.size:
        a_ii = A[interior][:, interior].tocsr()
        values[interior] = cg_solve(a_ii, load[interior], tol, maxit_factor * interior.size)
    return values


def solve_poisson_dirichlet(mesh: Mesh, f: Optional[SourceFunction], trace: TraceField,
                            tol: float = 1e-10, stiffness: Optional[sp.csr_matrix] = None,
                            maxit_factor: int = 10) -> NodalField:
    """
    y_h = y_fh + B̃_h u^h + ỹ_0h.

    y_fh solves the interior problem with load (f, v_h); ỹ_0h with load
    −(A·B̃_h u^h) on the interior rows.
    """
    with track_stage(__name__, "solve_poisson_dirichlet", level="INFO", extra_data=mesh.summary()):
        A = stiffness if stiffness is not None else assemble_stiffness(mesh)
        lifted = lifting(mesh, trace).values
        y_f = solve_interior(mesh, A, source_load(mesh, f), tol, maxit_factor)
        y_0 = solve_interior(mesh, A, -(A @ lifted), tol, maxit_factor)
        return NodalField(mesh, y_f + lifted + y_0)


def prolongate(coarse: NodalField, fine: Mesh) -> NodalField:
    """
    Interpolate a coarse P1 field onto a bisection refinement of its mesh.

    New vertices take the mean of the two endpoints of the edge they bisected.

    Raises:
        TraceMismatchError: if ``fine`` was not refined from the coarse mesh
    """
    n_coarse = coarse.mesh.n_vertices
    parents = fine.vertex_parents
    if (fine.n_vertices < n_coarse
            or not np.array_equal(fine.vertices[:n_coarse], coarse.mesh.vertices)
            or (parents[n_coarse:] < 0).any()):
        raise TraceMismatchError("Mesh is not a refinement of the field's mesh",
                                 {'coarse_vertices': n_coarse, 'fine_vertices': fine.n_vertices})
    values = np.empty(fine.n_vertices)
    values[:n_coarse] = coarse.values
    # parents always carry lower indices than their midpoint
    for v in range(n_coarse, fine.n_vertices):
        values[v] = 0.5 * (values[parents[v, 0]] + values[parents[v, 1]])
    return NodalField(fine, values)


def export_matrix(matrix: sp.spmatrix, path: Union[str, Path], comment: str = "") -> None:
    """Write a sparse matrix in Matrix Market coordinate format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
    logger.info(f"Matrix exported to {path}", extra={'extra_data': {'shape': list(matrix.shape),
                                                                     'nnz': int(matrix.nnz)}})
