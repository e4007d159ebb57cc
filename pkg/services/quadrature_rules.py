"""
Quadrature rules for P1 meshes with a singular corner at the origin.

Volume integrals use a degree-4 six-point rule per triangle. Triangles
touching the origin use a Duffy map from the corner with geometric layers
in the radial variable (ratio 1/2) and a Gauss-Jacobi rule on the
innermost layer; triangles close to the origin are subdivided uniformly
first. Boundary integrals use Gauss-Legendre per edge with a quadratic
substitution and geometric splitting on the two edges touching the origin.

The rules are built once per mesh and reused, so every inner product of a
run is computed with the same points and weights.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from models.mesh_models import Mesh, CORNER_VERTEX


# Degree-4 rule on the reference triangle: (a, weight) orbits of (1-2a, a, a)
_DEGREE4_ORBITS = (
    (0.445948490915965, 0.223381589678011),
    (0.091576213509771, 0.109951743655322),
)

# Degree-2 three-point rule
_DEGREE2_BARY = np.array([
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
])
_DEGREE2_WEIGHTS = np.full(3, 1.0 / 3.0)


def gauss_legendre_01(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_jacobi_01(n: int, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ∫_0^1 t^beta g(t) dt ≈ Σ w g(t)."""
    x, w = roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 0.5 ** (beta + 1.0)


@lru_cache(maxsize=None)
def degree4_triangle_rule() -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric points (6, 3) and weights summing to 1."""
    bary, weights = [], []
    for a, w in _DEGREE4_ORBITS:
        b = 1.0 - 2.0 * a
        bary += [[b, a, a], [a, b, a], [a, a, b]]
        weights += [w, w, w]
    return np.array(bary), np.array(weights)


def degree2_triangle_rule() -> Tuple[np.ndarray, np.ndarray]:
    return _DEGREE2_BARY, _DEGREE2_WEIGHTS


@lru_cache(maxsize=None)
def subdivided_triangle_rule(levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Degree-4 rule on the 4**levels uniform subtriangles of the reference triangle."""
    corners = np.eye(3)[None, :, :]  # (S, 3 corners, 3 bary)
    for _ in range(levels):
        c0, c1, c2 = corners[:, 0], corners[:, 1], corners[:, 2]
        m01, m12, m20 = 0.5 * (c0 + c1), 0.5 * (c1 + c2), 0.5 * (c2 + c0)
        corners = np.concatenate([
            np.stack([c0, m01, m20], axis=1),
            np.stack([m01, c1, m12], axis=1),
            np.stack([m20, m12, c2], axis=1),
            np.stack([m12, m20, m01], axis=1),
        ])
    base_bary, base_weights = degree4_triangle_rule()
    bary = np.einsum('qk,skj->sqj', base_bary, corners).reshape(-1, 3)
    weights = np.tile(base_weights, len(corners)) / len(corners)
    return bary, weights


@lru_cache(maxsize=None)
def radial_rule(depth: int, n: int, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rule for ∫_0^1 Φ(u) du when Φ(u) behaves like u**beta near 0.

    Gauss-Legendre on the layers [2^-(k+1), 2^-k], k < depth, and
    Gauss-Jacobi with weight u**beta on [0, 2^-depth].
    """
    x, w = gauss_legendre_01(n)
    nodes, weights = [], []
    for k in range(depth):
        lo, hi = 0.5 ** (k + 1), 0.5 ** k
        nodes.append(lo + (hi - lo) * x)
        weights.append((hi - lo) * w)
    a = 0.5 ** depth
    t, wj = gauss_jacobi_01(n, beta)
    u = a * t
    nodes.append(u)
    weights.append(a ** (beta + 1.0) * wj / u ** beta)
    return np.concatenate(nodes), np.concatenate(weights)


@lru_cache(maxsize=None)
def corner_edge_rule(n: int, levels: int, ratio: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rule for ∫_0^1 g(σ) dσ with g ~ σ^(-1/2) at σ = 0: σ = s², and the
    s-interval split geometrically toward 0.
    """
    x, w = gauss_legendre_01(n)
    nodes, weights = [], []
    edges = [ratio ** k for k in range(levels + 1)] + [0.0]
    for hi, lo in zip(edges[:-1], edges[1:]):
        s = lo + (hi - lo) * x
        nodes.append(s * s)
        weights.append((hi - lo) * w * 2.0 * s)
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass(frozen=True, eq=False)
class MeshQuadrature:
    """
    Volume quadrature on a mesh: point p lies in triangle ``element[p]``
    with barycentric coordinates ``bary[p]`` and absolute weight ``weights[p]``.
    """
    mesh: Mesh
    element: np.ndarray
    bary: np.ndarray
    weights: np.ndarray
    points: np.ndarray

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def interpolate(self, field: np.ndarray) -> np.ndarray:
        """Values of the P1 function with vertex coefficients ``field`` at the points."""
        local = field[self.mesh.triangles[self.element]]
        return np.einsum('pk,pk->p', self.bary, local)

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def hat_pairing(self, values: np.ndarray) -> np.ndarray:
        """(g, λ_x)_Ω for every vertex x, given g at the points."""
        vertex_ids = self.mesh.triangles[self.element].ravel()
        contributions = (self.bary * (self.weights * values)[:, None]).ravel()
        return np.bincount(vertex_ids, weights=contributions, minlength=self.mesh.n_vertices)


@dataclass(frozen=True, eq=False)
class BoundaryQuadrature:
    """
    Boundary quadrature: point p lies on boundary edge ``edge[p]`` at
    ``la[p]·a + lb[p]·b``; ``weights`` are absolute (length) weights.
    """
    mesh: Mesh
    edge: np.ndarray
    la: np.ndarray
    lb: np.ndarray
    weights: np.ndarray
    points: np.ndarray

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def interpolate(self, trace_values: np.ndarray) -> np.ndarray:
        """Values of the boundary P1 function with loop-order coefficients ``trace_values``."""
        pos = self.mesh.boundary_position[self.mesh.boundary_edges[self.edge]]
        return self.la * trace_values[pos[:, 0]] + self.lb * trace_values[pos[:, 1]]

    def hat_pairing(self, values: np.ndarray) -> np.ndarray:
        """(g, λ_x)_Γ for every boundary vertex x in loop order."""
        pos = self.mesh.boundary_position[self.mesh.boundary_edges[self.edge]]
        wv = self.weights * values
        n = len(self.mesh.boundary_vertices)
        return (np.bincount(pos[:, 0], weights=wv * self.la, minlength=n)
                + np.bincount(pos[:, 1], weights=wv * self.lb, minlength=n))


def _points_from_bary(mesh: Mesh, element: np.ndarray, bary: np.ndarray) -> np.ndarray:
    corners = mesh.vertices[mesh.triangles[element]]  # (P, 3, 2)
    return np.einsum('pk,pkd->pd', bary, corners)


def _template_block(elements: np.ndarray, areas: np.ndarray, bary: np.ndarray, weights: np.ndarray):
    q = len(weights)
    return (np.repeat(elements, q),
            np.tile(bary, (len(elements), 1)),
            (areas[elements, None] * weights[None, :]).ravel())


def _corner_block(mesh: Mesh, elements: np.ndarray, depth: int, n: int, beta: float):
    u, wu = radial_rule(depth, n, beta)
    v, wv = gauss_legendre_01(n)
    uu, vv = np.meshgrid(u, v, indexing='ij')
    ww = np.outer(wu * u, wv)
    uu, vv, ww = uu.ravel(), vv.ravel(), ww.ravel()
    q = len(ww)

    areas = mesh.signed_areas[elements]
    corner_local = np.argmax(mesh.triangles[elements] == CORNER_VERTEX, axis=1)
    bary = np.zeros((len(elements), q, 3))
    for c in range(3):
        sel = corner_local == c
        bary[sel, :, c] = 1.0 - uu
        bary[sel, :, (c + 1) % 3] = uu * (1.0 - vv)
        bary[sel, :, (c + 2) % 3] = uu * vv
    weights = 2.0 * areas[:, None] * ww[None, :]
    return np.repeat(elements, q), bary.reshape(-1, 3), weights.ravel()


def build_volume_quadrature(mesh: Mesh, depth: int = 16, corner_points: int = 6,
                            near_levels: int = 2, near_factor: float = 2.0,
                            beta: float = 0.0) -> MeshQuadrature:
    """
    Composite volume quadrature for integrands singular at the origin.

    Args:
        mesh: triangulation with the corner vertex at the origin
        depth: number of geometric radial layers on corner triangles
        corner_points: Gauss points per direction on corner triangles
        near_levels: uniform subdivision levels for triangles with r_T < near_factor·h_T
        near_factor: proximity threshold relative to h_T
        beta: exponent of the integrand's radial behavior u**beta (including the
              Duffy Jacobian) on the innermost layer, clipped to (-1, 0]
    """
    beta = float(min(max(beta, -0.95), 0.0))
    areas = mesh.signed_areas
    corner = mesh.touches_corner
    near = ~corner & (mesh.corner_distances < near_factor * mesh.diameters)
    regular = ~corner & ~near

    blocks = [_template_block(np.flatnonzero(regular), areas, *degree4_triangle_rule())]
    if near.any():
        blocks.append(_template_block(np.flatnonzero(near), areas, *subdivided_triangle_rule(near_levels)))
    if corner.any():
        blocks.append(_corner_block(mesh, np.flatnonzero(corner), depth, corner_points, beta))

    element = np.concatenate([b[0] for b in blocks])
    bary = np.concatenate([b[1] for b in blocks])
    weights = np.concatenate([b[2] for b in blocks])
    return MeshQuadrature(mesh, element, bary, weights, _points_from_bary(mesh, element, bary))


def build_source_quadrature(mesh: Mesh) -> MeshQuadrature:
    """Degree-2 three-point rule on every triangle (source loads)."""
    element, bary, weights = _template_block(np.arange(mesh.n_triangles), mesh.signed_areas,
                                             *degree2_triangle_rule())
    return MeshQuadrature(mesh, element, bary, weights, _points_from_bary(mesh, element, bary))


def build_boundary_quadrature(mesh: Mesh, n_points: int = 8, levels: int = 12,
                              ratio: float = 0.25) -> BoundaryQuadrature:
    """
    Gauss-Legendre per boundary edge; edges touching the origin use
    corner_edge_rule measured from the origin.
    """
    lengths = mesh.boundary_lengths
    starts_at_corner = mesh.boundary_edges[:, 0] == CORNER_VERTEX
    ends_at_corner = mesh.boundary_edges[:, 1] == CORNER_VERTEX
    plain = np.flatnonzero(~starts_at_corner & ~ends_at_corner)

    x, w = gauss_legendre_01(n_points)
    edge = [np.repeat(plain, n_points)]
    lb = [np.tile(x, len(plain))]
    la = [np.tile(1.0 - x, len(plain))]
    weights = [(lengths[plain, None] * w[None, :]).ravel()]

    sigma, ws = corner_edge_rule(n_points, levels, ratio)
    for ids, from_start in ((np.flatnonzero(starts_at_corner), True),
                            (np.flatnonzero(ends_at_corner), False)):
        if not len(ids):
            continue
        edge.append(np.repeat(ids, len(sigma)))
        near, far = np.tile(sigma, len(ids)), np.tile(1.0 - sigma, len(ids))
        la.append(far if from_start else near)
        lb.append(near if from_start else far)
        weights.append((lengths[ids, None] * ws[None, :]).ravel())

    edge = np.concatenate(edge)
    la, lb = np.concatenate(la), np.concatenate(lb)
    a = mesh.vertices[mesh.boundary_edges[edge, 0]]
    b = mesh.vertices[mesh.boundary_edges[edge, 1]]
    points = la[:, None] * a + lb[:, None] * b
    return BoundaryQuadrature(mesh, edge, la, lb, np.concatenate(weights), points)
