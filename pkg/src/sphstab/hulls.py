"""Incremental (beneath-beyond) convex hulls in R^3 and R^4.

Facet orientation tests run in floating point and fall back to exact rational
determinants when the float value is too small to trust.  A point lying on a
facet's hyperplane counts as beneath it, which is a consistent symbolic
perturbation toward the interior: flat faces with more than ``d`` vertices
(co-spherical inputs) come out triangulated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

# Float orientation values below this (relative to the edge scale) are
# re-evaluated exactly.
EXACT_FALLBACK = 1e-10


def _exact_det(rows) -> Fraction:
    """Determinant of a small square matrix of Fractions (Bareiss-free elimination)."""
    M = [list(r) for r in rows]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            if M[r][c] != 0:
                f = M[r][c] / M[c][c]
                for k in range(c, n):
                    M[r][k] -= f * M[c][k]
    return det


def orientation(P: np.ndarray, q: np.ndarray) -> int:
    """Sign of ``det[p_1-p_0, ..., p_{d-1}-p_0, q-p_0]`` for ``d`` points ``P`` in R^d."""
    A = np.vstack([P[1:] - P[0], q - P[0]])
    val = np.linalg.det(A)
    scale = np.prod(np.linalg.norm(A, axis=1))
    if abs(val) > EXACT_FALLBACK * max(scale, 1e-300):
        return 1 if val > 0 else -1
    F = [[Fraction(float(x)) for x in row] for row in np.vstack([P, q[None]])]
    rows = [[a - b for a, b in zip(r, F[0])] for r in F[1:]]
    det = _exact_det(rows)
    return (det > 0) - (det < 0)


def _normal(P: np.ndarray) -> np.ndarray:
    """Generalized cross product of the edge vectors of the ``d`` points ``P``,
    signed so that ``n . (q - p_0)`` equals :func:`orientation`'s determinant."""
    E = P[1:] - P[0]
    d = P.shape[1]
    n = np.empty(d)
    for k in range(d):
        minor = np.delete(E, k, axis=1)
        n[k] = (-1) ** (d - 1 + k) * np.linalg.det(minor)
    return n


@dataclass
class HullComplex:
    """Simplicial boundary complex of ``conv(points)``.

    ``facets[f]`` lists vertex indices (sorted); ``normals[f]`` is the unit
    outward normal and ``offsets[f]`` the signed distance of the facet's
    hyperplane from the origin.
    """

    points: np.ndarray = field(repr=False)
    facets: np.ndarray
    normals: np.ndarray = field(repr=False)
    offsets: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def vertices(self) -> np.ndarray:
        return np.unique(self.facets)

    def ridges(self) -> dict[tuple[int, ...], list[int]]:
        """Map each ridge (sorted vertex tuple) to the facets containing it."""
        out: dict[tuple[int, ...], list[int]] = {}
        for f, verts in enumerate(self.facets):
            for r in itertools.combinations(verts.tolist(), self.dim - 1):
                out.setdefault(r, []).append(f)
        return out

    def neighbors(self) -> list[list[int]]:
        """Facet adjacency across ridges."""
        adj: list[list[int]] = [[] for _ in range(self.n_facets)]
        for fs in self.ridges().values():
            if len(fs) == 2:
                a, b = fs
                adj[a].append(b)
                adj[b].append(a)
        return [sorted(a) for a in adj]

    def face_counts(self) -> list[int]:
        """``f_0, ..., f_{d-1}`` of the boundary complex."""
        d = self.dim
        out = []
        for k in range(1, d + 1):
            faces = set()
            for verts in self.facets.tolist():
                faces.update(itertools.combinations(verts, k))
            out.append(len(faces))
        return out

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.face_counts()))

    def max_violation(self) -> float:
        """Largest signed distance of any point beyond a facet hyperplane."""
        D = self.points @ self.normals.T - self.offsets[None, :]
        return float(D.max())


def _initial_simplex(X: np.ndarray) -> list[int]:
    d = X.shape[1]
    chosen = [0]
    far = int(np.argmax(np.linalg.norm(X - X[0], axis=1)))
    chosen.append(far)
    while len(chosen) < d + 1:
        B = X[chosen[1:]] - X[chosen[0]]
        Q, _ = np.linalg.qr(B.T)
        R = X - X[chosen[0]]
        resid = np.linalg.norm(R - (R @ Q) @ Q.T, axis=1)
        k = int(np.argmax(resid))
        if resid[k] <= 1e-12 * max(1.0, float(np.abs(X).max())):
            raise ValueError("input points are not full-dimensional")
        chosen.append(k)
    return chosen


def convex_hull(points) -> HullComplex:
    """Convex hull of at least ``d+1`` points in R^d for d in {3, 4}."""
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[1] not in (3, 4):
        raise ValueError(f"convex_hull supports d in {{3, 4}}, got shape {X.shape}")
    n, d = X.shape
    if n < d + 1:
        raise ValueError(f"need at least {d + 1} points, got {n}")
    init = _initial_simplex(X)
    interior = X[init].mean(axis=0)

    facets: dict[int, tuple[int, ...]] = {}
    normals: dict[int, np.ndarray] = {}
    ridge_map: dict[frozenset, set[int]] = {}
    next_id = itertools.count()

    def add_facet(verts):
        verts = tuple(verts)
        P = X[list(verts)]
        if orientation(P, interior) > 0:
            verts = (verts[1], verts[0]) + verts[2:]
            P = X[list(verts)]
        fid = next(next_id)
        facets[fid] = verts
        normals[fid] = _normal(P)
        for r in itertools.combinations(verts, d - 1):
            ridge_map.setdefault(frozenset(r), set()).add(fid)

    def drop_facet(fid):
        verts = facets.pop(fid)
        normals.pop(fid)
        for r in itertools.combinations(verts, d - 1):
            key = frozenset(r)
            ridge_map[key].discard(fid)
            if not ridge_map[key]:
                del ridge_map[key]

    for skip in range(d + 1):
        add_facet([init[k] for k in range(d + 1) if k != skip])

    for p in range(n):
        if p in init:
            continue
        q = X[p]
        ids = list(facets)
        N = np.array([normals[f] for f in ids])
        FV = X[np.array([facets[f] for f in ids])]
        V0 = FV[:, 0, :]
        side = np.einsum("ij,ij->i", N, q[None, :] - V0)
        # Hadamard bound on the determinant; |N| alone is unreliable for slivers.
        edges = np.linalg.norm(FV[:, 1:, :] - V0[:, None, :], axis=2)
        scale = edges.prod(axis=1) * np.linalg.norm(q[None, :] - V0, axis=1)
        visible = []
        for f, s, sc in zip(ids, side, scale):
            if abs(s) > EXACT_FALLBACK * max(sc, 1e-300):
                if s > 0:
                    # The interior has negative orientation for every facet.
                    visible.append(f)
            elif orientation(X[list(facets[f])], q) > 0:
                visible.append(f)
        if not visible:
            continue
        vis = set(visible)
        horizon = []
        for f in visible:
            for r in itertools.combinations(facets[f], d - 1):
                others = ridge_map[frozenset(r)] - {f}
                if others and not others & vis:
                    horizon.append(r)
        for f in visible:
            drop_facet(f)
        for r in horizon:
            add_facet(r + (p,))

    F = np.array(sorted(tuple(sorted(v)) for v in facets.values()), dtype=int)
    P = X[F]
    Nn = np.array([_normal(P[k]) for k in range(len(F))])
    Nn /= np.linalg.norm(Nn, axis=1)[:, None]
    off = np.einsum("ij,ij->i", Nn, P[:, 0, :])
    # Orient outward relative to the interior reference point.
    flip = (Nn @ interior - off) > 0
    Nn[flip] *= -1
    off[flip] *= -1
    return HullComplex(X, F, Nn, off)
