"""
Dual singular complement method.

Post-processes the P1 solution y_h of the Dirichlet problem on a
quasi-uniform mesh:

    1. p_s^h = p̃_h + r^{−λ} sin λθ, β_h = ‖p_s^h‖²/π, φ̃_h
    2. γ_h = (y_h, p_s^h)/‖p_s^h‖², α_h from the boundary datum
    3. δ_h = α_h − γ_h, z̃_h = y_h + δ_h p̃_h, z_h = z̃_h + δ_h r^{−λ} sin λθ

All inner products with the dual singular function come from one volume
quadrature per mesh.
"""

import math
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from models.mesh_models import Mesh, CORNER_VERTEX
from models.fem_models import (
    NodalField, TraceField, SingularExponent, DualSingularComplement, DscmSolution
)
from models.error_models import TraceMismatchError
from .logging_service import get_logger
from .performance_monitor import track_stage
from .fem_service import (
    SourceFunction, assemble_mass, assemble_stiffness, lifting, prolongate, solve_interior,
    solve_poisson_dirichlet
)
from .trace_service import regularize_trace
from .quadrature_rules import (
    BoundaryQuadrature, MeshQuadrature, build_boundary_quadrature, build_source_quadrature
)
from .singular_service import (
    boundary_singular_pairing, checked_singular_quadrature, eval_dual, eval_primal, singular_load
)


logger = get_logger(__name__)

BoundaryFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _boundary_values(mesh: Mesh, values: np.ndarray) -> NodalField:
    lifted = np.zeros(mesh.n_vertices)
    lifted[mesh.boundary_vertices] = values
    return NodalField(mesh, lifted)


def build_complement(mesh: Mesh, s: SingularExponent, tol: float = 1e-10,
                     stiffness: Optional[sp.csr_matrix] = None,
                     mass: Optional[sp.csr_matrix] = None,
                     quad: Optional[MeshQuadrature] = None,
                     maxit_factor: int = 10, depth: int = 16, corner_points: int = 6,
                     check_tolerance: Optional[float] = 1e-6) -> DualSingularComplement:
    """
    Discrete dual singular function p_s^h = p_h* − r_h + r^{−λ} sin λθ.

    r_h is the nodal lifting of r^{−λ} sin λθ with the value 0 at the corner
    vertex; p_h* ∈ Y_0h solves (∇p_h*, ∇v_h) = (∇r_h, ∇v_h). Without a given
    ``quad`` the volume quadrature is built at ``depth`` and checked against
    twice that depth.

    Raises:
        QuadratureAccuracyError: if the depth-doubling check fails
    """
    with track_stage(__name__, "build_complement", level="INFO", extra_data=mesh.summary()) as info:
        A = stiffness if stiffness is not None else assemble_stiffness(mesh)
        M = mass if mass is not None else assemble_mass(mesh)
        quad = quad or checked_singular_quadrature(mesh, s, depth, corner_points,
                                                   check_tolerance=check_tolerance)

        boundary = mesh.boundary_vertices
        not_corner = boundary != CORNER_VERTEX
        values = np.zeros(len(boundary))
        values[not_corner] = eval_dual(s, mesh.vertices[boundary[not_corner]])
        r_h = _boundary_values(mesh, values)

        p_star = NodalField(mesh, solve_interior(mesh, A, A @ r_h.values, tol, maxit_factor))
        p_tilde = NodalField(mesh, p_star.values - r_h.values)

        dual_load, dual_norm_sq = singular_load(s, quad)
        mass_p_tilde = M @ p_tilde.values
        norm_sq = float(p_tilde.values @ mass_p_tilde + 2.0 * p_tilde.values @ dual_load + dual_norm_sq)
        info.update({'norm_ps_h_sq': norm_sq, 'dual_norm_sq': dual_norm_sq})

    return DualSingularComplement(
        r_h=r_h, p_star=p_star, p_tilde=p_tilde, lam=s.lam, norm_ps_h_sq=norm_sq,
        dual_load=dual_load, dual_norm_sq=dual_norm_sq, mass_p_tilde=mass_p_tilde
    )


def compute_beta(c: DualSingularComplement) -> float:
    """β_h = ‖p_s^h‖²/π."""
    return c.norm_ps_h_sq / math.pi


def primal_lifting(mesh: Mesh, s: SingularExponent) -> NodalField:
    """s_h: nodal lifting of r^λ sin λθ."""
    return _boundary_values(mesh, eval_primal(s, mesh.vertices[mesh.boundary_vertices]))


def build_phi(mesh: Mesh, c: DualSingularComplement, beta_h: float, s: SingularExponent,
              tol: float = 1e-10, stiffness: Optional[sp.csr_matrix] = None,
              maxit_factor: int = 10) -> NodalField:
    """
    φ̃_h = φ_h* − β_h s_h with φ_h* ∈ Y_0h solving
    (∇φ_h*, ∇v_h) = (p_s^h, v_h) + β_h (∇s_h, ∇v_h).
    """
    with track_stage(__name__, "build_phi", extra_data={'beta_h': beta_h}):
        A = stiffness if stiffness is not None else assemble_stiffness(mesh)
        s_h = primal_lifting(mesh, s).values
        load = c.mass_p_tilde + c.dual_load + beta_h * (A @ s_h)
        phi_star = solve_interior(mesh, A, load, tol, maxit_factor)
        return NodalField(mesh, phi_star - beta_h * s_h)


def compute_gamma(y_h: NodalField, c: DualSingularComplement) -> float:
    """γ_h = (y_h, p_s^h)/‖p_s^h‖²."""
    return c.inner_with_ps(y_h.values) / c.norm_ps_h_sq


def source_singular_pairing(mesh: Mesh, f: Optional[SourceFunction], phi_tilde: NodalField,
                            beta_h: float, s: SingularExponent) -> float:
    """(f, φ_s^h)_Ω = (f, φ̃_h) + β_h (f, r^λ sin λθ); 0 when f is None."""
    if f is None:
        return 0.0
    quad = build_source_quadrature(mesh)
    values = np.asarray(f(quad.points[:, 0], quad.points[:, 1]), dtype=float)
    return quad.integrate(values * (quad.interpolate(phi_tilde.values)
                                    + beta_h * eval_primal(s, quad.points)))


def compute_alpha(mesh: Mesh, u: BoundaryFunction, u_trace: TraceField,
                  f: Optional[SourceFunction], c: DualSingularComplement, beta_h: float,
                  phi_tilde: NodalField, s: SingularExponent,
                  stiffness: Optional[sp.csr_matrix] = None,
                  pairing_radius: float = 0.1, pairing_mu: Optional[float] = None,
                  pairing_h: Optional[float] = None) -> float:
    """
    α_h = [(B̃_h u^h, p_s^h) − (∇B̃_h u^h, ∇φ̃_h) − β_h (u, ∂_n(r^λ sin λθ))_Γ
           + (f, φ_s^h)] / ‖p_s^h‖².

    The boundary term uses the raw datum u, the other terms its regularization u^h.
    """
    with track_stage(__name__, "compute_alpha") as info:
        A = stiffness if stiffness is not None else assemble_stiffness(mesh)
        lifted = lifting(mesh, u_trace).values
        if pairing_h is None:
            pairing_h = 0.25 * float(mesh.boundary_lengths.max())
        pairing = boundary_singular_pairing(u, s, pairing_radius, pairing_mu, pairing_h)
        numerator = (c.inner_with_ps(lifted)
                     - float(lifted @ (A @ phi_tilde.values))
                     - beta_h * pairing
                     + source_singular_pairing(mesh, f, phi_tilde, beta_h, s))
        alpha = numerator / c.norm_ps_h_sq
        info.update({'boundary_pairing': pairing, 'alpha_h': alpha})
    return alpha


def projection_coefficient(solution: DscmSolution, c: DualSingularComplement) -> float:
    """(z_h, p_s^h)/‖p_s^h‖² for z_h = z̃_h + δ_h r^{−λ} sin λθ; equals α_h."""
    z = solution.z_tilde.values
    numerator = (c.inner_with_ps(z)
                 + solution.delta * (c.p_tilde.values @ c.dual_load + c.dual_norm_sq))
    return float(numerator / c.norm_ps_h_sq)


def complement_cauchy(coarse: DualSingularComplement, fine: DualSingularComplement,
                      mass: Optional[sp.csr_matrix] = None) -> Tuple[float, float]:
    """
    (‖p_s^h − p_s^{h'}‖_{L²(Ω)}, |β_h − β_{h'}|) for p_s^h on a refinement of
    the mesh of p_s^{h'}. The singular parts cancel, leaving p̃_h − p̃_{h'}.

    Raises:
        TraceMismatchError: if the fine mesh is not refined from the coarse one
    """
    mesh = fine.p_tilde.mesh
    M = mass if mass is not None else assemble_mass(mesh)
    d = fine.p_tilde.values - prolongate(coarse.p_tilde, mesh).values
    return math.sqrt(max(float(d @ (M @ d)), 0.0)), abs(compute_beta(fine) - compute_beta(coarse))


def dscm_solve(mesh: Mesh, u: BoundaryFunction, f: Optional[SourceFunction],
               s: SingularExponent, tol: float = 1e-10, regularization: str = "l2proj",
               volume_quad: Optional[MeshQuadrature] = None,
               boundary_quad: Optional[BoundaryQuadrature] = None,
               pairing_radius: float = 0.1, pairing_mu: Optional[float] = None,
               pairing_h: Optional[float] = None, maxit_factor: int = 10) -> DscmSolution:
    """
    y_h from the regularized datum, then the complement, β_h, φ̃_h, γ_h, α_h
    and z̃_h = y_h + (α_h − γ_h) p̃_h.
    """
    with track_stage(__name__, "dscm_solve", level="INFO", extra_data=mesh.summary()) as info:
        A = assemble_stiffness(mesh)
        M = assemble_mass(mesh)
        trace = regularize_trace(u, mesh, regularization, boundary_quad or build_boundary_quadrature(mesh))
        y_h = solve_poisson_dirichlet(mesh, f, trace, tol, stiffness=A, maxit_factor=maxit_factor)

        c = build_complement(mesh, s, tol, stiffness=A, mass=M, quad=volume_quad,
                             maxit_factor=maxit_factor)
        beta_h = compute_beta(c)
        phi_tilde = build_phi(mesh, c, beta_h, s, tol, stiffness=A, maxit_factor=maxit_factor)
        gamma_h = compute_gamma(y_h, c)
        alpha_h = compute_alpha(mesh, u, trace, f, c, beta_h, phi_tilde, s, stiffness=A,
                                pairing_radius=pairing_radius, pairing_mu=pairing_mu,
                                pairing_h=pairing_h)

        delta_h = alpha_h - gamma_h
        z_tilde = NodalField(mesh, y_h.values + delta_h * c.p_tilde.values)
        solution = DscmSolution.create(z_tilde, alpha_h, gamma_h, beta_h, s.lam, complement=c)
        info.update(solution.coefficients())
    return solution


def export_solution(solution: DscmSolution, path: Union[str, Path]) -> None:
    """
    Header ``dscm_solution vertices N lambda L delta D alpha A gamma G beta B``,
    then one z̃_h coefficient per line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    z = solution.z_tilde.values
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"dscm_solution vertices {len(z)} lambda {solution.lam:.17g} "
                f"delta {solution.delta:.17g} alpha {solution.alpha:.17g} "
                f"gamma {solution.gamma:.17g} beta {solution.beta:.17g}\n")
        for value in z:
            f.write(f"{value:.17g}\n")
    logger.info(f"DSCM solution exported to {path}", extra={'extra_data': solution.coefficients()})


def import_solution(path: Union[str, Path], mesh: Mesh) -> DscmSolution:
    """
    Raises:
        ValueError: on a malformed header
        TraceMismatchError: if the coefficient count differs from the mesh
    """
    with open(path, 'r', encoding='utf-8') as f:
        header = f.readline().split()
        values = np.array([float(line) for line in f if line.strip()])
    keys = ['vertices', 'lambda', 'delta', 'alpha', 'gamma', 'beta']
    if len(header) != 13 or header[0] != 'dscm_solution' or header[1::2] != keys:
        raise ValueError(f"Malformed DSCM solution header: {' '.join(header)}")
    fields = dict(zip(header[1::2], header[2::2]))
    if int(fields['vertices']) != mesh.n_vertices or len(values) != mesh.n_vertices:
        raise TraceMismatchError("Solution does not match the mesh",
                                 {'coefficients': int(len(values)), 'vertices': mesh.n_vertices})
    return DscmSolution(
        z_tilde=NodalField(mesh, values), delta=float(fields['delta']),
        alpha=float(fields['alpha']), gamma=float(fields['gamma']),
        beta=float(fields['beta']), lam=float(fields['lambda'])
    )
