"""
Singular functions of the corner at the origin and the integrals built on them.

Primal singular function r^λ sin(λθ), dual singular function
r^{−λ} sin(λθ), λ = π/ω. Volume pairings use the corner-aware volume
quadrature; the boundary pairing (u, ∂_n(r^λ sin λθ))_Γ uses a midpoint
rule on a boundary partition graded toward the origin.
"""

import math
from typing import Callable, Optional, Tuple

import numpy as np

from models.mesh_models import Mesh
from models.fem_models import NodalField, SingularExponent
from models.error_models import QuadratureAccuracyError, SingularEvaluationError
from .logging_service import get_logger
from .performance_monitor import track_stage
from .mesh_service import domain_corners, polar_of
from .quadrature_rules import MeshQuadrature, build_volume_quadrature


logger = get_logger(__name__)

BoundaryFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


def eval_primal(s: SingularExponent, points) -> np.ndarray:
    """r^λ sin(λθ); 0 at the origin."""
    r, theta = polar_of(points, s.omega)
    return r ** s.lam * np.sin(s.lam * theta)


def eval_dual(s: SingularExponent, points) -> np.ndarray:
    """
    r^{−λ} sin(λθ).

    Raises:
        SingularEvaluationError: if any point is the origin
    """
    r, theta = polar_of(points, s.omega)
    if np.any(r == 0.0):
        raise SingularEvaluationError("Dual singular function evaluated at the origin",
                                      {'omega': s.omega})
    return r ** (-s.lam) * np.sin(s.lam * theta)


def primal_gradient(s: SingularExponent, points) -> np.ndarray:
    """∇(r^λ sin λθ) = λ r^{λ−1} (sin((λ−1)θ), cos((λ−1)θ))."""
    r, theta = polar_of(points, s.omega)
    if np.any(r == 0.0):
        raise SingularEvaluationError("Primal gradient evaluated at the origin",
                                      {'omega': s.omega})
    scale = s.lam * r ** (s.lam - 1.0)
    phase = (s.lam - 1.0) * theta
    return np.stack([scale * np.sin(phase), scale * np.cos(phase)], axis=-1)


def normal_derivative_primal(s: SingularExponent, points, normals) -> np.ndarray:
    """∂_n(r^λ sin λθ) for outward unit ``normals`` at boundary ``points``."""
    return np.einsum('...d,...d->...', primal_gradient(s, points), np.asarray(normals, dtype=float))


def dual_quadrature_exponent(s: SingularExponent) -> float:
    """Radial exponent of r^{−2λ} including the polar Jacobian."""
    return 1.0 - 2.0 * s.lam if s.lam < 1.0 else 0.0


def singular_volume_quadrature(mesh: Mesh, s: SingularExponent, depth: int = 16,
                               corner_points: int = 6, near_levels: int = 2,
                               near_factor: float = 2.0) -> MeshQuadrature:
    """Volume quadrature tuned for squares of the dual singular function."""
    return build_volume_quadrature(mesh, depth=depth, corner_points=corner_points,
                                   near_levels=near_levels, near_factor=near_factor,
                                   beta=dual_quadrature_exponent(s))


def singular_load(s: SingularExponent, quad: MeshQuadrature) -> Tuple[np.ndarray, float]:
    """
    ((r^{−λ} sin λθ, λ_x)_Ω for every vertex x, ‖r^{−λ} sin λθ‖²_{L²(Ω)}),
    both from the same quadrature.
    """
    values = eval_dual(s, quad.points)
    return quad.hat_pairing(values), quad.integrate(values * values)


def _relative_change(value: float, doubled: float) -> float:
    scale = abs(doubled)
    return abs(doubled - value) / scale if scale > 0.0 else abs(doubled - value)


def checked_singular_quadrature(mesh: Mesh, s: SingularExponent, depth: int = 16,
                                corner_points: int = 6, near_levels: int = 2,
                                near_factor: float = 2.0,
                                check_tolerance: Optional[float] = 1e-6) -> MeshQuadrature:
    """
    singular_volume_quadrature, accepted only if the hat pairings and the
    squared norm of r^{−λ} sin λθ move by at most ``check_tolerance``
    (relative) when the corner depth doubles. ``None`` skips the check.

    Raises:
        QuadratureAccuracyError: with the achieved relative change
    """
    quad = singular_volume_quadrature(mesh, s, depth, corner_points, near_levels, near_factor)
    if check_tolerance is None:
        return quad
    with track_stage(__name__, "check_singular_quadrature", extra_data={'depth': depth}) as info:
        load, norm_sq = singular_load(s, quad)
        doubled = singular_volume_quadrature(mesh, s, 2 * depth, corner_points, near_levels, near_factor)
        load_2, norm_sq_2 = singular_load(s, doubled)
        load_change = float(np.abs(load_2 - load).max() / np.abs(load_2).max())
        change = max(_relative_change(norm_sq, norm_sq_2), load_change)
        info['relative_change'] = change
        if change > check_tolerance:
            raise QuadratureAccuracyError(
                "Dual singular integrals change under depth doubling",
                {'depth': depth, 'norm_sq': norm_sq, 'doubled_norm_sq': norm_sq_2,
                 'relative_change': change, 'tolerance': check_tolerance}
            )
    return quad


def volume_inner_products(mesh: Mesh, field: NodalField, s: SingularExponent,
                          quad: Optional[MeshQuadrature] = None,
                          depth: int = 16, corner_points: int = 6,
                          check_tolerance: Optional[float] = 1e-6) -> Tuple[float, float]:
    """
    (⟨field, r^{−λ} sin λθ⟩_Ω, ‖r^{−λ} sin λθ‖²_{L²(Ω)}).

    Requires λ < 1 so that r^{−2λ} is integrable. Without a given ``quad``
    both integrals are repeated with twice the corner depth and must agree
    to ``check_tolerance``.

    Raises:
        QuadratureAccuracyError: if the depth-doubling check fails
    """
    if s.lam >= 1.0:
        raise ValueError(f"Dual singular function is not square integrable for lambda={s.lam}")

    def integrals(q: MeshQuadrature) -> Tuple[float, float]:
        values = eval_dual(s, q.points)
        return q.integrate(q.interpolate(field.values) * values), q.integrate(values * values)

    with track_stage(__name__, "volume_inner_products", extra_data={'depth': depth}) as info:
        if quad is not None:
            pairing, norm_sq = integrals(quad)
        else:
            pairing, norm_sq = integrals(singular_volume_quadrature(mesh, s, depth, corner_points))
            if check_tolerance is not None:
                doubled = integrals(singular_volume_quadrature(mesh, s, 2 * depth, corner_points))
                change = max(_relative_change(pairing, doubled[0]),
                             _relative_change(norm_sq, doubled[1]))
                info['relative_change'] = change
                if change > check_tolerance:
                    raise QuadratureAccuracyError(
                        "Singular inner products change under depth doubling",
                        {'pairing': pairing, 'doubled_pairing': doubled[0], 'norm_sq': norm_sq,
                         'doubled_norm_sq': doubled[1], 'relative_change': change,
                         'tolerance': check_tolerance}
                    )
        info.update({'pairing': pairing, 'norm_sq': norm_sq})
    return pairing, norm_sq


def _graded_ray_nodes(length: float, radius: float, mu: float, h: float) -> np.ndarray:
    """
    Nodes on [0, length] with spacing ~ h·t^{1−μ} inside ``radius`` and
    ~ h^{1/μ} next to 0, uniform (≤ h) beyond.
    """
    radius = min(radius, length)
    n = max(1, math.ceil(radius ** mu / (mu * h)))
    i = np.arange(1, n + 1, dtype=float)
    # log space: R·(i/n)^{1/μ} underflows for small μ
    graded = np.exp(math.log(radius) + (np.log(i) - math.log(n)) / mu)
    graded = graded[graded > 0.0]
    nodes = np.unique(np.concatenate([[0.0], graded, [radius]]))
    if length > radius:
        m = max(1, math.ceil((length - radius) / h))
        nodes = np.concatenate([nodes, np.linspace(radius, length, m + 1)[1:]])
    return nodes


def pairing_partition(s: SingularExponent, radius: float, mu_q: float,
                      h_q: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Midpoints, lengths and outward normals of the graded boundary partition
    of Ω_ω used by boundary_singular_pairing.
    """
    if not 0.0 < mu_q <= 1.0:
        raise ValueError(f"Quadrature grading must lie in (0, 1], got {mu_q}")
    if radius <= 0.0 or h_q <= 0.0:
        raise ValueError("Pairing radius and mesh size must be positive")
    corners = domain_corners(s.omega)
    k = len(corners)
    midpoints, lengths, normals = [], [], []
    for j in range(k):
        a, b = corners[j], corners[(j + 1) % k]
        side = np.linalg.norm(b - a)
        tangent = (b - a) / side
        normal = np.array([tangent[1], -tangent[0]])
        if j == 0 or j == k - 1:
            # ray through the origin: parametrize from the origin outward
            outer = b if j == 0 else a
            t = _graded_ray_nodes(side, radius, mu_q, h_q)
            direction = outer / side
        else:
            t = np.linspace(0.0, side, max(1, math.ceil(side / h_q)) + 1)
            direction = tangent
        start = np.zeros(2) if j == 0 or j == k - 1 else a
        mid = 0.5 * (t[1:] + t[:-1])
        midpoints.append(start[None, :] + mid[:, None] * direction[None, :])
        lengths.append(np.diff(t))
        normals.append(np.repeat(normal[None, :], len(mid), axis=0))
    return np.vstack(midpoints), np.concatenate(lengths), np.vstack(normals)


def boundary_singular_pairing(u: BoundaryFunction, s: SingularExponent, radius: float = 0.1,
                              mu_q: Optional[float] = None, h_q: float = 0.01) -> float:
    """
    (u, ∂_n(r^λ sin λθ))_Γ by the one-point Gauss rule on a boundary
    partition graded toward the origin (h_E ~ h_q·r_E^{1−μ_q} inside ``radius``).

    ``mu_q`` defaults to 2π/ω − 1 (capped at 1).
    """
    if mu_q is None:
        mu_q = min(1.0, s.optimal_grading)
    with track_stage(__name__, "boundary_singular_pairing",
                     extra_data={'radius': radius, 'mu_q': mu_q, 'h_q': h_q}) as info:
        points, lengths, normals = pairing_partition(s, radius, mu_q, h_q)
        values = np.asarray(u(points[:, 0], points[:, 1]), dtype=float)
        result = float(np.sum(lengths * values * normal_derivative_primal(s, points, normals)))
        info.update({'elements': int(len(lengths)), 'value': result})
    return result
