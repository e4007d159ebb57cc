"""
Mesh Data Models

This module defines the triangulation of the pacman domain and the
grading parameters used to refine it toward the singular corner.

Conventions:
    - triangles are stored counterclockwise; local index 2 is the newest
      vertex, so the refinement edge is the local edge (0, 1)
    - boundary edges are stored in loop order with the domain on the left,
      starting at the corner vertex (index 0, the origin)
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List

import numpy as np


CORNER_VERTEX = 0


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Conforming triangulation of the pacman domain.

    Attributes:
        vertices: (N, 2) coordinates
        triangles: (M, 3) vertex indices, counterclockwise, newest vertex last
        boundary_edges: (K, 2) vertex pairs in loop order, domain on the left
        boundary_segments: (K,) straight boundary segment id of each edge
        omega: interior angle at the origin in radians
        generation: (M,) number of bisections since the initial mesh
        vertex_parents: (N, 2) endpoints of the edge each vertex bisected, -1 for initial vertices
    """
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_segments: np.ndarray
    omega: float
    generation: np.ndarray = field(default=None)
    vertex_parents: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.generation is None:
            object.__setattr__(self, 'generation', np.zeros(len(self.triangles), dtype=np.int64))
        if self.vertex_parents is None:
            object.__setattr__(self, 'vertex_parents', np.full((len(self.vertices), 2), -1, dtype=np.int64))

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def corner_vertex(self) -> int:
        return CORNER_VERTEX

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        """Boundary vertices in loop order (each appears once)."""
        return self.boundary_edges[:, 0].copy()

    @cached_property
    def boundary_position(self) -> np.ndarray:
        """Position of each vertex in ``boundary_vertices``, -1 for interior vertices."""
        position = np.full(self.n_vertices, -1, dtype=np.int64)
        position[self.boundary_vertices] = np.arange(len(self.boundary_vertices))
        return position

    @cached_property
    def is_boundary(self) -> np.ndarray:
        return self.boundary_position >= 0

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def diameters(self) -> np.ndarray:
        """h_T: longest edge of every triangle."""
        p = self.vertices[self.triangles]
        lengths = np.stack([
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ], axis=1)
        return lengths.max(axis=1)

    @cached_property
    def vertex_radii(self) -> np.ndarray:
        return np.linalg.norm(self.vertices, axis=1)

    @cached_property
    def corner_distances(self) -> np.ndarray:
        """r_T: smallest vertex radius of every triangle (0 when it touches the origin)."""
        return self.vertex_radii[self.triangles].min(axis=1)

    @cached_property
    def touches_corner(self) -> np.ndarray:
        return (self.triangles == CORNER_VERTEX).any(axis=1)

    @cached_property
    def boundary_lengths(self) -> np.ndarray:
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        return np.linalg.norm(b - a, axis=1)

    @cached_property
    def boundary_normals(self) -> np.ndarray:
        """Outward unit normals; the tangent rotated clockwise."""
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        tangent = (b - a) / self.boundary_lengths[:, None]
        return np.column_stack([tangent[:, 1], -tangent[:, 0]])

    @property
    def total_area(self) -> float:
        return float(self.signed_areas.sum())

    @property
    def boundary_length(self) -> float:
        return float(self.boundary_lengths.sum())

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())

    def summary(self) -> Dict[str, Any]:
        """Sizes for logging."""
        return {
            'vertices': self.n_vertices,
            'triangles': self.n_triangles,
            'boundary_edges': int(len(self.boundary_edges)),
            'omega_degrees': float(np.degrees(self.omega)),
            'h_max': self.h_max,
        }


@dataclass(frozen=True)
class GradingParams:
    """
    Grading condition c1·h^{1/μ} ≤ h_T ≤ c2·h^{1/μ} at the corner and
    c1·h·r_T^{1−μ} ≤ h_T ≤ c2·h·r_T^{1−μ} elsewhere.

    ``corner_floor`` stops refining corner triangles once h_T drops below it.
    """
    mu: float
    h: float
    c1: float = 0.25
    c2: float = 4.0
    corner_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"Grading parameter mu must lie in (0, 1], got {self.mu}")
        if not 0.0 < self.c1 <= self.c2:
            raise ValueError(f"Grading constants must satisfy 0 < c1 <= c2, got c1={self.c1}, c2={self.c2}")
        if self.h <= 0.0:
            raise ValueError(f"Mesh parameter h must be positive, got {self.h}")
        if self.corner_floor < 0.0:
            raise ValueError(f"Corner floor must be non-negative, got {self.corner_floor}")


@dataclass
class GradingReport:
    """Outcome of verify_grading."""
    passed: bool
    too_large: np.ndarray
    too_small: np.ndarray

    @property
    def violators(self) -> List[int]:
        return sorted(set(self.too_large.tolist()) | set(self.too_small.tolist()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'passed': self.passed,
            'too_large': int(len(self.too_large)),
            'too_small': int(len(self.too_small)),
        }
