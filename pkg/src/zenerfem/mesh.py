"""Structured triangulations of axis-aligned rectangles.

Every grid cell is split along its bottom-left to top-right diagonal, so a mesh
with ``2n`` cells per side is a nested refinement of the one with ``n``.

Conventions
-----------
* triangles are stored counterclockwise;
* local edge ``i`` of a triangle is opposite to local vertex ``i`` and is
  traversed from vertex ``i+1`` to vertex ``i+2`` (cyclically);
* the global orientation of an edge runs from its lower to its higher vertex
  index, and ``tri_edge_signs[t, i]`` is +1 when the local traversal agrees
  with it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

DIRICHLET = "D"
NEUMANN = "N"


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Geometry:
    """Affine map data of one triangle, ``F(xhat) = origin + jacobian @ xhat``."""

    origin: np.ndarray
    jacobian: np.ndarray
    det: float
    normals: np.ndarray  # (3, 2) outward unit normals of the local edges
    lengths: np.ndarray  # (3,)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    tri_edges: np.ndarray
    tri_edge_signs: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    subdomain: np.ndarray
    n: int = 0
    rect: tuple = ((0.0, 1.0), (0.0, 1.0))
    subdomain_rule: Optional[Callable] = field(default=None, repr=False)
    neumann_rule: Optional[Callable] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def h(self) -> float:
        """Largest triangle diameter."""
        v = self.vertices[self.triangles]
        d = [np.linalg.norm(v[:, i] - v[:, (i + 1) % 3], axis=1) for i in range(3)]
        return float(np.max(d))

    @property
    def neumann_edges(self) -> np.ndarray:
        return self.boundary_edges[self.boundary_tags == NEUMANN]

    def jacobians(self):
        """Vectorised affine data: origins (T, 2), Jacobians (T, 2, 2), dets (T,)."""
        v = self.vertices[self.triangles]
        J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=-1)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        return v[:, 0], J, det

    def areas(self) -> np.ndarray:
        return 0.5 * self.jacobians()[2]

    def geometry(self, t: int) -> Geometry:
        if not 0 <= t < self.n_triangles:
            raise IndexError(f"triangle index {t} out of range")
        v = self.vertices[self.triangles[t]]
        J = np.column_stack([v[1] - v[0], v[2] - v[0]])
        tangents = np.array([v[(i + 2) % 3] - v[(i + 1) % 3] for i in range(3)])
        lengths = np.linalg.norm(tangents, axis=1)
        # counterclockwise traversal: outward normal is the tangent turned clockwise
        normals = np.column_stack([tangents[:, 1], -tangents[:, 0]]) / lengths[:, None]
        return Geometry(v[0].copy(), J, float(np.linalg.det(J)), normals, lengths)

    def dump(self) -> str:
        """Plain-text dump for debugging: header ``V E T`` then the three tables."""
        lines = [f"{self.n_vertices} {self.n_edges} {self.n_triangles}"]
        lines += [f"{x:.17g} {y:.17g}" for x, y in self.vertices]
        lines += [f"{a} {b}" for a, b in self.edges]
        lines += [f"{a} {b} {c}" for a, b, c in self.triangles]
        return "\n".join(lines) + "\n"


def _edge_structure(triangles: np.ndarray):
    local = np.stack(
        [triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1
    )
    flat = np.sort(local.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(flat, axis=0, return_inverse=True)
    tri_edges = inverse.reshape(-1, 3)
    signs = np.where(local[:, :, 0] < local[:, :, 1], 1, -1)
    counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
    return edges, tri_edges, signs, counts


def _inset_points(vertices, triangles):
    # points strictly inside each triangle, near its corners and at its centroid
    v = vertices[triangles]
    c = v.mean(axis=1, keepdims=True)
    return np.concatenate([c, c + 0.98 * (v - c)], axis=1)


def build_uniform(
    n: int,
    rect=((0.0, 1.0), (0.0, 1.0)),
    subdomain_rule: Optional[Callable] = None,
    neumann_rule: Optional[Callable] = None,
) -> Mesh:
    """Uniform ``n x n`` triangulation of ``rect``.

    Parameters
    ----------
    n : int
        Number of cells per side (>= 1).
    rect : ((x0, x1), (y0, y1))
        Rectangle extents.
    subdomain_rule : callable, optional
        Maps an array of points (..., 2) to integer labels. Must be constant on
        every triangle. Defaults to a single subdomain labelled 1.
    neumann_rule : callable, optional
        Maps boundary edge midpoints (m, 2) to booleans; True tags the edge as
        part of the traction boundary. Defaults to a pure displacement boundary.
    """
    if int(n) != n or n < 1:
        raise MeshError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    (x0, x1), (y0, y1) = rect
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {rect!r}")
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    a = j * (n + 1) + i
    b = a + 1
    c = a + n + 2
    d = a + n + 1
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([a, b, c])
    triangles[1::2] = np.column_stack([a, c, d])

    edges, tri_edges, signs, counts = _edge_structure(triangles)
    boundary = np.flatnonzero(counts == 1)
    tags = np.full(len(boundary), DIRICHLET, dtype="<U1")
    if neumann_rule is not None and len(boundary):
        mid = vertices[edges[boundary]].mean(axis=1)
        tags[np.asarray(neumann_rule(mid), dtype=bool)] = NEUMANN

    if subdomain_rule is None:
        subdomain = np.ones(len(triangles), dtype=np.int64)
    else:
        pts = _inset_points(vertices, triangles)
        labels = np.asarray(subdomain_rule(pts)).astype(np.int64)
        if np.any(labels != labels[:, :1]):
            bad = int(np.flatnonzero(np.any(labels != labels[:, :1], axis=1))[0])
            raise MeshError(f"subdomain rule is not constant on triangle {bad}")
        subdomain = labels[:, 0]

    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        tri_edges=tri_edges,
        tri_edge_signs=signs,
        boundary_edges=boundary,
        boundary_tags=tags,
        subdomain=subdomain,
        n=n,
        rect=((float(x0), float(x1)), (float(y0), float(y1))),
        subdomain_rule=subdomain_rule,
        neumann_rule=neumann_rule,
    )


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: same rectangle and rules with twice the cells per side."""
    return build_uniform(2 * mesh.n, mesh.rect, mesh.subdomain_rule, mesh.neumann_rule)


def locate(mesh: Mesh, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Index of a triangle containing each point (brute force, -1 if none)."""
    points = np.atleast_2d(points)
    origin, J, _ = mesh.jacobians()
    Jinv = np.linalg.inv(J)
    ref = np.einsum("tij,ptj->pti", Jinv, points[:, None, :] - origin[None])
    inside = (ref[..., 0] >= -tol) & (ref[..., 1] >= -tol) & (ref.sum(-1) <= 1 + tol)
    found = np.where(inside.any(axis=1), inside.argmax(axis=1), -1)
    return found
