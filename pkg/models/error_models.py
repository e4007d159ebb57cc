"""
Error Data Models

This module defines the error codes and the exception hierarchy shared by
all numerical services. Every exception carries a stable integer code so
that the CLI can report a single diagnostic line and exit nonzero.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional
import json


class FemErrorCodes:
    """Stable error codes reported by the CLI."""
    CONFIG_INVALID = 10
    INVALID_INPUT = 11
    MESH_INVALID = 20
    GRADING_FAILED = 21
    ASSEMBLY_FAILED = 30
    SOLVER_DIVERGED = 31
    TRACE_MISMATCH = 40
    QUADRATURE_INACCURATE = 50
    SINGULAR_EVALUATION = 51
    IO_FAILED = 60
    INTERNAL = 99


class FemError(Exception):
    """
    有限元计算错误基类

    Base class of all numerical errors. Subclasses fix ``code``; ``data``
    holds structured context (triangle ids, residuals, estimates).
    """
    code: int = FemErrorCodes.INTERNAL

    def __init__(self, message: str, data: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.data = data or {}


class MeshError(FemError):
    """Invalid mesh input or a broken mesh invariant."""
    code = FemErrorCodes.MESH_INVALID


class GradingError(FemError):
    """Graded refinement did not reach the grading condition."""
    code = FemErrorCodes.GRADING_FAILED


class AssemblyError(FemError):
    """Element-level assembly failure, e.g. a degenerate triangle."""
    code = FemErrorCodes.ASSEMBLY_FAILED


class SolverConvergenceError(FemError):
    """Conjugate gradients stopped before reaching the tolerance."""
    code = FemErrorCodes.SOLVER_DIVERGED


class TraceMismatchError(FemError):
    """A trace or nodal field does not match the mesh it is used with."""
    code = FemErrorCodes.TRACE_MISMATCH


class QuadratureAccuracyError(FemError):
    """A quadrature self-check exceeded its tolerance."""
    code = FemErrorCodes.QUADRATURE_INACCURATE


class SingularEvaluationError(FemError):
    """A singular function was sampled where it is undefined."""
    code = FemErrorCodes.SINGULAR_EVALUATION


@dataclass
class ErrorDiagnostic:
    """
    错误诊断信息结构

    Attributes:
        code: error code from FemErrorCodes
        message: human readable description
        data: optional structured context
    """
    code: int
    message: str
    data: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        """将诊断对象转换为字典格式"""
        result = {
            "code": self.code,
            "message": self.message
        }
        if self.data:
            result["data"] = self.data
        return result

    def to_line(self) -> str:
        """Render the one-line diagnostic printed by the CLI."""
        line = f"error {self.code}: {self.message}"
        if self.data:
            line += f" {json.dumps(self.data, default=str, sort_keys=True)}"
        return line
