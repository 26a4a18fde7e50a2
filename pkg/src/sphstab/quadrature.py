"""Adaptive cubature over Euclidean simplices of dimension 1, 2 and 3.

The base rule is a collapsed (Duffy) Gauss-Jacobi product rule on the
reference simplex.  Adaptivity is by regular midpoint refinement: a simplex
is accepted once the rule on it and the sum of the rule over its ``2**m``
children agree to the requested relative tolerance.
"""

from __future__ import annotations

from functools import lru_cache
from math import factorial
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import roots_jacobi


class QuadResult(NamedTuple):
    value: float
    error: float
    n_simplices: int


@lru_cache(maxsize=None)
def simplex_rule(m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Jacobi rule on {x >= 0, sum(x) <= 1} in R^m.

    Returns ``(points, weights)`` with ``points.shape == (n**m, m)``.  The
    weights sum to ``1/m!``.  The rule integrates polynomials of degree
    ``2n - 1`` exactly.
    """
    if m < 1:
        raise ValueError("simplex dimension must be >= 1")
    nodes, wts = [], []
    for k in range(1, m + 1):
        a = m - k
        x, w = roots_jacobi(n, a, 0.0)
        nodes.append((x + 1.0) / 2.0)
        wts.append(w / 2.0 ** (a + 1))
    grids = np.meshgrid(*nodes, indexing="ij")
    wgrid = np.meshgrid(*wts, indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    pts = np.empty_like(t)
    scale = np.ones(t.shape[0])
    for k in range(m):
        pts[:, k] = scale * t[:, k]
        scale = scale * (1.0 - t[:, k])
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def _children_index(m: int) -> list[tuple[int, ...]]:
    # Node numbering: 0..m are the vertices, then midpoints in the order of
    # _midpoint_pairs(m).
    if m == 1:
        return [(0, 2), (2, 1)]
    if m == 2:
        # midpoints: 3=(0,1) 4=(0,2) 5=(1,2)
        return [(0, 3, 4), (3, 1, 5), (4, 5, 2), (3, 5, 4)]
    if m == 3:
        # midpoints: 4=(0,1) 5=(0,2) 6=(0,3) 7=(1,2) 8=(1,3) 9=(2,3)
        return [
            (0, 4, 5, 6),
            (4, 1, 7, 8),
            (5, 7, 2, 9),
            (6, 8, 9, 3),
            (4, 5, 6, 8),
            (4, 5, 7, 8),
            (5, 6, 8, 9),
            (5, 7, 8, 9),
        ]
    raise ValueError(f"no refinement table for simplex dimension {m}")


def _midpoint_pairs(m: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]


def subdivide(simplices: np.ndarray) -> np.ndarray:
    """Split each simplex of shape ``(m+1, m)`` into ``2**m`` congruent-volume children.

    Input ``(k, m+1, m)``; output ``(k, 2**m, m+1, m)``.
    """
    k, mp1, m = simplices.shape
    mids = np.stack(
        [(simplices[:, i] + simplices[:, j]) / 2.0 for i, j in _midpoint_pairs(m)], axis=1
    )
    nodes = np.concatenate([simplices, mids], axis=1)
    idx = np.array(_children_index(m))
    return nodes[:, idx]


def simplex_volumes(simplices: np.ndarray) -> np.ndarray:
    m = simplices.shape[-1]
    edges = simplices[..., 1:, :] - simplices[..., :1, :]
    return np.abs(np.linalg.det(edges)) / factorial(m)


def apply_rule(
    f: Callable[[np.ndarray], np.ndarray], simplices: np.ndarray, order: int
) -> np.ndarray:
    """Rule value on each simplex of a ``(k, m+1, m)`` batch."""
    k, _, m = simplices.shape
    ref, w = simplex_rule(m, order)
    base = simplices[:, 0, :]
    edges = simplices[:, 1:, :] - base[:, None, :]
    pts = base[:, None, :] + np.einsum("qj,kjd->kqd", ref, edges)
    vals = np.asarray(f(pts.reshape(-1, m)), dtype=float).reshape(k, -1)
    jac = np.abs(np.linalg.det(edges))
    return jac * (vals @ w)


def integrate_simplex(
    f: Callable[[np.ndarray], np.ndarray],
    vertices,
    order: int = 8,
    rtol: float = 1e-7,
    max_depth: int = 10,
) -> QuadResult:
    """Integrate ``f`` over one simplex (or a batch) to relative tolerance ``rtol``.

    ``f`` maps an ``(N, m)`` array of points to ``N`` values.  ``vertices`` has
    shape ``(m+1, m)`` or ``(k, m+1, m)``; in the batched case the integral
    over the union is returned.
    """
    simp = np.asarray(vertices, dtype=float)
    if simp.ndim == 2:
        simp = simp[None]
    m = simp.shape[-1]
    nchild = 2**m
    active = simp
    coarse = apply_rule(f, active, order)
    total, err, count = 0.0, 0.0, 0
    for _ in range(max_depth):
        children = subdivide(active)
        fine = apply_rule(f, children.reshape(-1, m + 1, m), order).reshape(-1, nchild)
        fine_sum = fine.sum(axis=1)
        diff = np.abs(fine_sum - coarse)
        ok = diff <= rtol * np.abs(fine_sum)
        total += float(fine_sum[ok].sum())
        err += float(diff[ok].sum())
        count += int(ok.sum()) * nchild
        if ok.all():
            return QuadResult(total, err, count)
        active = children[~ok].reshape(-1, m + 1, m)
        coarse = fine[~ok].ravel()
    raise RuntimeError(
        f"simplex cubature did not reach rtol={rtol} within depth {max_depth}"
    )
