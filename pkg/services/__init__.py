"""
DSCM FEM - Services Package

This package contains the numerical services (meshing, assembly, trace
regularization, singular functions, the dual singular complement method
and convergence studies) together with logging, error handling and
performance monitoring.
"""

from .error_handler import ErrorHandler
from .mesh_service import (
    build_initial_mesh, bisect_marked, refine_to_graded, verify_grading, polar_of,
    uniform_refine, export_mesh, import_mesh
)
from .fem_service import (
    assemble_stiffness, assemble_mass, lifting, solve_poisson_dirichlet, cg_solve
)
from .trace_service import boundary_mass, l2_project_trace, carstensen_trace
from .singular_service import (
    eval_primal, eval_dual, normal_derivative_primal, volume_inner_products, checked_singular_quadrature,
    boundary_singular_pairing
)
from .dscm_service import (
    build_complement, compute_beta, build_phi, compute_gamma, compute_alpha, dscm_solve,
    complement_cauchy
)
from .study_service import l2_error, eoc, run_experiment, run_tables

__all__ = [
    'ErrorHandler',
    'build_initial_mesh',
    'bisect_marked',
    'refine_to_graded',
    'verify_grading',
    'polar_of',
    'uniform_refine',
    'export_mesh',
    'import_mesh',
    'assemble_stiffness',
    'assemble_mass',
    'lifting',
    'solve_poisson_dirichlet',
    'cg_solve',
    'boundary_mass',
    'l2_project_trace',
    'carstensen_trace',
    'eval_primal',
    'eval_dual',
    'normal_derivative_primal',
    'volume_inner_products',
    'checked_singular_quadrature',
    'boundary_singular_pairing',
    'build_complement',
    'compute_beta',
    'build_phi',
    'compute_gamma',
    'compute_alpha',
    'dscm_solve',
    'complement_cauchy',
    'l2_error',
    'eoc',
    'run_experiment',
    'run_tables'
]
