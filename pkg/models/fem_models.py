"""
Finite Element Data Models

P1 fields on a mesh, boundary traces, the singular exponent of the
corner and the objects produced by the dual singular complement method.
"""

from dataclasses import dataclass
import math
from typing import Any, Dict, Optional

import numpy as np

from .mesh_models import Mesh
from .error_models import TraceMismatchError


@dataclass(frozen=True, eq=False)
class NodalField:
    """P1 function given by one coefficient per mesh vertex."""
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.mesh.n_vertices,):
            raise TraceMismatchError(
                "Nodal field length does not match the vertex count",
                {'length': int(self.values.size), 'vertices': self.mesh.n_vertices}
            )


@dataclass(frozen=True, eq=False)
class TraceField:
    """Piecewise linear function on the boundary, one coefficient per boundary vertex (loop order)."""
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        expected = len(self.mesh.boundary_vertices)
        if self.values.shape != (expected,):
            raise TraceMismatchError(
                "Trace length does not match the boundary vertex count",
                {'length': int(self.values.size), 'boundary_vertices': expected}
            )


@dataclass(frozen=True)
class SingularExponent:
    """λ = π/ω for the corner of interior angle ω."""
    omega: float

    def __post_init__(self):
        if not 0.0 < self.omega < 2.0 * math.pi:
            raise ValueError(f"Interior angle must lie in (0, 2pi), got {self.omega}")

    @property
    def lam(self) -> float:
        return math.pi / self.omega

    @property
    def optimal_grading(self) -> float:
        """2π/ω − 1 = 2λ − 1."""
        return 2.0 * math.pi / self.omega - 1.0

    @classmethod
    def from_degrees(cls, degrees: float) -> 'SingularExponent':
        return cls(math.radians(degrees))


@dataclass(frozen=True, eq=False)
class DualSingularComplement:
    """
    Discrete dual singular function p_s^h = p̃_h + r^{−λ}sin(λθ).

    ``dual_load`` holds (r^{−λ}sin λθ, λ_x)_Ω for every hat function and
    ``dual_norm_sq`` is ‖r^{−λ}sin λθ‖²; both come from the same volume
    quadrature, so every inner product with p_s^h is consistent.
    """
    r_h: NodalField
    p_star: NodalField
    p_tilde: NodalField
    lam: float
    norm_ps_h_sq: float
    dual_load: np.ndarray
    dual_norm_sq: float
    mass_p_tilde: np.ndarray

    def inner_with_ps(self, values: np.ndarray) -> float:
        """(v_h, p_s^h)_Ω for a P1 coefficient vector."""
        return float(values @ self.mass_p_tilde + values @ self.dual_load)


@dataclass(frozen=True, eq=False)
class DscmSolution:
    """
    z_h = z̃_h + δ_h·r^{−λ}sin(λθ) with δ_h = α_h − γ_h.

    ``complement`` is the p_s^h the coefficients were computed with; it is
    not part of the exported file.
    """
    z_tilde: NodalField
    delta: float
    alpha: float
    gamma: float
    beta: float
    lam: float
    complement: Optional[DualSingularComplement] = None

    @classmethod
    def create(cls, z_tilde: NodalField, alpha: float, gamma: float, beta: float,
               lam: float, complement: Optional[DualSingularComplement] = None) -> 'DscmSolution':
        return cls(z_tilde=z_tilde, delta=alpha - gamma, alpha=alpha, gamma=gamma,
                   beta=beta, lam=lam, complement=complement)

    def coefficients(self) -> Dict[str, Any]:
        return {
            'lambda': self.lam,
            'delta': self.delta,
            'alpha': self.alpha,
            'gamma': self.gamma,
            'beta': self.beta,
        }
