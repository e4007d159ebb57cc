"""
DSCM FEM - Data Models Package

This package contains the data structures shared by the numerical services:
meshes and grading parameters, finite element fields, the dual singular
complement objects, experiment reports and the error hierarchy.
"""

from .mesh_models import Mesh, GradingParams, GradingReport
from .fem_models import (
    NodalField, TraceField, SingularExponent, DualSingularComplement, DscmSolution
)
from .experiment_models import ReportRow, ExperimentReport
from .error_models import (
    FemErrorCodes, FemError, MeshError, GradingError, AssemblyError,
    SolverConvergenceError, TraceMismatchError, QuadratureAccuracyError,
    SingularEvaluationError, ErrorDiagnostic
)

__all__ = [
    'Mesh',
    'GradingParams',
    'GradingReport',
    'NodalField',
    'TraceField',
    'SingularExponent',
    'DualSingularComplement',
    'DscmSolution',
    'ReportRow',
    'ExperimentReport',
    'FemErrorCodes',
    'FemError',
    'MeshError',
    'GradingError',
    'AssemblyError',
    'SolverConvergenceError',
    'TraceMismatchError',
    'QuadratureAccuracyError',
    'SingularEvaluationError',
    'ErrorDiagnostic'
]
