"""Delone and Dirichlet-Voronoi cell decompositions of S^{d-1}, d in {3, 4}.

Delone cells are the radial projections of the hull facets.  Voronoi faces
are read off by duality: an m-face of the cell ``D_i`` corresponds to a
Delone face with ``d - m`` vertices containing ``i``, and its vertices are the
circumcenters of the Delone cells containing that face.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .hulls import HullComplex, convex_hull
from .polytopes import origin_in_interior
from .sphgeo import (
    circumradius_rinf,
    circumradius_rj,
    geodesic_distance,
    sphere_measure,
    spherical_simplex_volume,
    unit_vectors,
)

TIE_TOL = 1e-9
PROPER_TOL = 1e-10


class HypothesisError(ValueError):
    """The point set violates a standing hypothesis (e.g. o not interior)."""


@dataclass
class DeloneComplex:
    """Spherical Delone cells of a point set whose hull contains o in its interior."""

    points: np.ndarray = field(repr=False)
    hull: HullComplex = field(repr=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def cells(self) -> np.ndarray:
        return self.hull.facets

    @property
    def n_cells(self) -> int:
        return self.hull.n_facets

    @property
    def circumcenters(self) -> np.ndarray:
        return self.hull.normals

    @cached_property
    def circumradii(self) -> np.ndarray:
        return np.arccos(np.clip(self.hull.offsets, -1.0, 1.0))

    @property
    def max_circumradius(self) -> float:
        return float(self.circumradii.max())

    def cell_volumes(self, rtol: float = 1e-7) -> np.ndarray:
        return np.array([spherical_simplex_volume(self.points[c], rtol=rtol) for c in self.cells])

    def equidistance_error(self) -> float:
        """Largest deviation of a cell vertex's distance to its circumcenter from the circumradius."""
        errs = []
        for c, z, r in zip(self.cells, self.circumcenters, self.circumradii):
            errs.append(np.abs(geodesic_distance(self.points[c], z) - r).max())
        return float(max(errs))

    @cached_property
    def cells_of_point(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(len(self.points))]
        for f, c in enumerate(self.cells.tolist()):
            for v in c:
                out[v].append(f)
        return out

    @cached_property
    def adjacency(self) -> list[list[int]]:
        return self.hull.neighbors()

    def to_dict(self) -> dict:
        return {
            "dimension": self.dim,
            "n_cells": self.n_cells,
            "cells": self.cells.tolist(),
            "circumcenters": self.circumcenters.tolist(),
            "circumradii": self.circumradii.tolist(),
            "max_circumradius": self.max_circumradius,
        }


def delone_complex(points) -> DeloneComplex:
    """Delone decomposition; raises :class:`HypothesisError` unless o is interior."""
    X = unit_vectors(points)
    if X.shape[1] not in (3, 4):
        raise ValueError("Delone decomposition is implemented for d in {3, 4}")
    if not origin_in_interior(X):
        raise HypothesisError("some open hemisphere contains none of the points")
    hull = convex_hull(X)
    if (hull.offsets <= 0).any():
        raise HypothesisError("a hull facet passes through or beyond the origin")
    missing = set(range(len(X))) - set(hull.vertices.tolist())
    if missing:
        raise HypothesisError(f"points {sorted(missing)} are not hull vertices")
    return DeloneComplex(X, hull)


@dataclass
class DVFace:
    """An m-dimensional face of a Voronoi cell and its dual Delone face."""

    dim: int
    delone_face: tuple[int, ...]
    vertex_ids: tuple[int, ...]
    vertices: np.ndarray = field(repr=False)


@dataclass
class DVCell:
    """Dirichlet-Voronoi cell of ``points[owner]``.

    ``constraints`` are the normals ``x_i - x_j`` of the bounding hemispheres.
    ``faces[m]`` lists the m-faces; vertex ids refer to ``vertices``, and
    ``vertex_cells[v]`` names the Delone cells whose circumcenter is vertex v.
    The face lattice is ``None`` when no Delone complex exists.
    """

    owner: int
    points: np.ndarray = field(repr=False)
    neighbors: tuple[int, ...]
    vertices: np.ndarray | None = field(default=None, repr=False)
    vertex_cells: list[list[int]] | None = field(default=None, repr=False)
    faces: dict[int, list[DVFace]] | None = field(default=None, repr=False)

    @property
    def center(self) -> np.ndarray:
        return self.points[self.owner]

    @property
    def constraints(self) -> np.ndarray:
        return self.center[None, :] - self.points[list(self.neighbors)]

    def contains(self, U, tol: float = 1e-12) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return (U @ self.constraints.T >= -tol).all(axis=1)

    def face_by_delone(self, key: tuple[int, ...]) -> DVFace:
        return self._index[tuple(sorted(key))]

    @cached_property
    def _index(self) -> dict[tuple[int, ...], DVFace]:
        return {f.delone_face: f for fs in (self.faces or {}).values() for f in fs}

    def subfaces(self, face: DVFace) -> list[DVFace]:
        """The (m-1)-faces of ``face``."""
        if face.dim == 0:
            return []
        return [g for g in self.faces[face.dim - 1] if set(face.delone_face) <= set(g.delone_face)]


def dv_cell(points, i: int, complex_: DeloneComplex | None = None) -> DVCell:
    """Voronoi cell of point ``i``; the face lattice needs a Delone complex."""
    X = unit_vectors(points)
    k, d = X.shape
    if not 0 <= i < k:
        raise IndexError(f"point index {i} out of range")
    if complex_ is None:
        try:
            complex_ = delone_complex(X)
        except (HypothesisError, ValueError):
            complex_ = None
    if complex_ is None:
        return DVCell(i, X, tuple(j for j in range(k) if j != i))

    cell_ids = complex_.cells_of_point[i]
    cells = complex_.cells
    # Circumcenters of co-spherical triangulated facets coincide: merge them.
    verts: list[np.ndarray] = []
    vertex_cells: list[list[int]] = []
    cell_to_vertex = {}
    for f in cell_ids:
        z = complex_.circumcenters[f]
        for v, w in enumerate(verts):
            if geodesic_distance(z, w) <= TIE_TOL:
                vertex_cells[v].append(f)
                cell_to_vertex[f] = v
                break
        else:
            cell_to_vertex[f] = len(verts)
            verts.append(z)
            vertex_cells.append([f])
    V = np.array(verts)

    faces: dict[int, list[DVFace]] = {}
    for m in range(d - 1):
        size = d - m
        seen = {}
        for f in cell_ids:
            others = [v for v in cells[f].tolist() if v != i]
            for sub in itertools.combinations(others, size - 1):
                key = tuple(sorted((i,) + sub))
                seen.setdefault(key, set()).add(cell_to_vertex[f])
        out = []
        for key, vids in sorted(seen.items()):
            vids = tuple(sorted(vids))
            if len(vids) < m + 1:
                continue  # collapsed by a co-spherical tie
            out.append(DVFace(m, key, vids, V[list(vids)]))
        faces[m] = out
    neighbors = tuple(sorted({j for f in cell_ids for j in cells[f].tolist() if j != i}))
    return DVCell(i, X, neighbors, V, vertex_cells, faces)


@dataclass
class ClosestPoint:
    point: np.ndarray
    distance: float
    relint: bool


def _relint_projection(x: np.ndarray, V: np.ndarray, boundary: list[np.ndarray]):
    """Normalized projection of ``x`` onto lin(V), and whether it is strictly
    inside the cone over ``V`` relative to lin(V)."""
    Q, _ = np.linalg.qr(V.T)
    rank = np.linalg.matrix_rank(V, tol=1e-12)
    Q = Q[:, :rank]
    p = Q @ (Q.T @ x)
    norm = np.linalg.norm(p)
    if norm <= 1e-14:
        return None, False
    p /= norm
    centroid = V.mean(axis=0)
    for B in boundary:
        # Normal of lin(B) inside lin(V), oriented toward the cone's interior.
        Qb, _ = np.linalg.qr(B.T)
        Qb = Qb[:, : np.linalg.matrix_rank(B, tol=1e-12)]
        n = centroid - Qb @ (Qb.T @ centroid)
        n = Q @ (Q.T @ n)
        nn = np.linalg.norm(n)
        if nn <= 1e-14 or n @ p / nn <= 1e-13:
            return p, False
    return p, True


def closest_point_on_face(cell: DVCell, face: DVFace) -> ClosestPoint:
    """``q_i(F)``: the point of ``F`` nearest to the cell's owner."""
    x = cell.center
    if face.dim == 0:
        z = face.vertices[0]
        return ClosestPoint(z, geodesic_distance(x, z), True)
    subs = cell.subfaces(face)
    p, inside = _relint_projection(x, face.vertices, [g.vertices for g in subs])
    if inside:
        return ClosestPoint(p, geodesic_distance(x, p), True)
    best = min((closest_point_on_face(cell, g) for g in subs), key=lambda c: c.distance)
    return ClosestPoint(best.point, best.distance, False)


@dataclass
class QuasiOrthoscheme:
    """Simplex ``(x_i, q_i(F_{d-2}), ..., q_i(F_0))`` of a proper tower."""

    owner: int
    tower: tuple[tuple[int, ...], ...]
    vertices: np.ndarray = field(repr=False)
    relint: tuple[bool, ...]

    @property
    def is_orthoscheme(self) -> bool:
        # Only F_1..F_{d-2} matter; a vertex is its own relative interior.
        return all(self.relint[1:])

    def volume(self, **kw) -> float:
        return spherical_simplex_volume(self.vertices, **kw)


def quasi_orthoschemes(cell: DVCell) -> list[QuasiOrthoscheme]:
    """All quasi-orthoschemes of ``cell`` (one per proper tower of faces)."""
    if cell.faces is None:
        raise HypothesisError("the cell has no face lattice")
    d = cell.points.shape[1]
    cache: dict[tuple[int, ...], ClosestPoint] = {}

    def q(face: DVFace) -> ClosestPoint:
        if face.delone_face not in cache:
            cache[face.delone_face] = closest_point_on_face(cell, face)
        return cache[face.delone_face]

    out = []

    def extend(chain: list[DVFace]):
        top = chain[-1]
        if top.dim == 0:
            tower = chain[::-1]  # F_0, ..., F_{d-2}
            qs = [q(f) for f in tower]
            pts = [c.point for c in qs]
            for a, b in itertools.combinations(pts, 2):
                if geodesic_distance(a, b) <= PROPER_TOL:
                    return
            verts = np.vstack([cell.center] + pts[::-1])
            out.append(QuasiOrthoscheme(cell.owner, tuple(f.delone_face for f in tower),
                                        verts, tuple(c.relint for c in qs)))
            return
        for g in cell.subfaces(top):
            extend(chain + [g])

    for top in cell.faces[d - 2]:
        extend([top])
    return out


@dataclass
class FaceBoundCheck:
    owner: int
    delone_face: tuple[int, ...]
    dim: int
    distance: float
    bound: float
    relint: bool

    @property
    def slack(self) -> float:
        return self.distance - self.bound


def check_face_bounds(cell: DVCell, phi: float) -> list[FaceBoundCheck]:
    """Distance from ``x_i`` to ``q_i(F)`` against ``r_{d-1-m}(phi)`` for every
    face, and against ``r_inf(phi)`` when ``q_i(F)`` is on the relative boundary."""
    d = cell.points.shape[1]
    out = []
    for m, fs in cell.faces.items():
        for f in fs:
            c = closest_point_on_face(cell, f)
            bound = circumradius_rj(d - 1 - m, phi)
            if not c.relint:
                bound = max(bound, circumradius_rinf(phi))
            out.append(FaceBoundCheck(cell.owner, f.delone_face, m, c.distance, bound, c.relint))
    return out


def tiling_volume_check(cx: DeloneComplex, rtol: float = 1e-7) -> float:
    """Relative error of the summed Delone cell volumes against ``|S^{d-1}|``."""
    total = float(cx.cell_volumes(rtol=rtol).sum())
    return abs(total - sphere_measure(cx.dim)) / sphere_measure(cx.dim)


__all__ = [
    "ClosestPoint",
    "DVCell",
    "DVFace",
    "DeloneComplex",
    "FaceBoundCheck",
    "HypothesisError",
    "QuasiOrthoscheme",
    "check_face_bounds",
    "closest_point_on_face",
    "delone_complex",
    "dv_cell",
    "quasi_orthoschemes",
    "tiling_volume_check",
]
