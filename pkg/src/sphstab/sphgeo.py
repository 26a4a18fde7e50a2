"""Spherical geometry on S^{d-1}: distances, trigonometry, caps and simplices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .quadrature import integrate_simplex

NORM_TOL = 1e-12
RENORM_TOL = 1e-9


def unit_vector(coords) -> np.ndarray:
    """Validate a point of S^{d-1}.

    Points within ``RENORM_TOL`` of the sphere are renormalized; anything
    farther off raises ``ValueError``.
    """
    x = np.asarray(coords, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"expected a vector of length >= 2, got shape {x.shape}")
    n = float(np.linalg.norm(x))
    if abs(n - 1.0) > RENORM_TOL:
        raise ValueError(f"vector norm {n!r} is not within {RENORM_TOL} of 1")
    # Exact at NORM_TOL; drift up to RENORM_TOL is repaired.
    return x if abs(n - 1.0) <= NORM_TOL else x / n


def unit_vectors(points) -> np.ndarray:
    """Row-wise :func:`unit_vector` for an ``(k, d)`` array."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError(f"expected an array of shape (k, d>=2), got {X.shape}")
    n = np.linalg.norm(X, axis=1)
    bad = np.abs(n - 1.0) > RENORM_TOL
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(f"point {i} has norm {n[i]!r}, not within {RENORM_TOL} of 1")
    # Rows already at NORM_TOL are kept bit for bit so files round-trip exactly.
    drift = np.abs(n - 1.0) > NORM_TOL
    X = X.copy()
    X[drift] /= n[drift, None]
    return X


def geodesic_distance(u, v) -> np.ndarray | float:
    """Angle between unit vectors, broadcasting over leading axes.

    Evaluated as ``2*atan2(|u-v|, |u+v|)``, which equals ``acos(<u,v>)`` but
    keeps full relative precision for nearly equal or antipodal points.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    a = np.linalg.norm(u - v, axis=-1)
    b = np.linalg.norm(u + v, axis=-1)
    out = 2.0 * np.arctan2(a, b)
    return float(out) if np.ndim(out) == 0 else out


def pairwise_distances(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return geodesic_distance(X[:, None, :], X[None, :, :])


def min_separation(X) -> float:
    D = pairwise_distances(X)
    iu = np.triu_indices(len(D), 1)
    return float(D[iu].min())


def law_of_cosines_side(a: float, b: float, gamma: float) -> float:
    """Third side ``c`` of a spherical triangle with sides ``a, b`` enclosing ``gamma``."""
    if not (0 < a <= math.pi / 2 and 0 < b <= math.pi / 2):
        raise ValueError("sides a, b must lie in (0, pi/2]")
    if not 0 < gamma < math.pi:
        raise ValueError("gamma must lie in (0, pi)")
    c = math.cos(a) * math.cos(b) + math.sin(a) * math.sin(b) * math.cos(gamma)
    return math.acos(min(1.0, max(-1.0, c)))


def circumradius_rj(j: int, phi: float) -> float:
    """Circumradius of the regular spherical j-simplex with edge length ``2*phi``."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if not 0 < phi < math.pi / 2:
        raise ValueError("phi must lie in (0, pi/2)")
    s = math.sqrt(2.0 * j / (j + 1.0)) * math.sin(phi)
    if s >= 1.0:
        raise ValueError(f"r_{j}({phi}) undefined: sqrt(2j/(j+1)) sin(phi) = {s} >= 1")
    return math.asin(s)


def circumradius_rinf(phi: float) -> float:
    """Equal legs of the right spherical triangle with hypotenuse ``2*phi``."""
    if not 0 < phi < math.pi / 2:
        raise ValueError("phi must lie in (0, pi/2)")
    s = math.sqrt(2.0) * math.sin(phi)
    if s >= 1.0:
        raise ValueError(f"r_inf({phi}) undefined: sqrt(2) sin(phi) = {s} >= 1")
    return math.asin(s)


def sphere_measure(d: int) -> float:
    """Hausdorff (d-1)-measure of S^{d-1}; ``sphere_measure(1) == 2`` (two points)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def cap_volume(d: int, theta: float) -> float:
    """Measure of the cap of angular radius ``theta`` on S^{d-1}."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if not 0 < theta <= math.pi:
        raise ValueError("theta must lie in (0, pi]")
    if d == 3:
        return 2.0 * math.pi * (1.0 - math.cos(theta))
    if d == 2:
        return 2.0 * theta
    val, _ = integrate.quad(lambda t: math.sin(t) ** (d - 2), 0.0, theta, epsabs=0, epsrel=1e-13)
    return sphere_measure(d - 1) * val


def _angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two (not necessarily unit) vectors of the same space."""
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    return geodesic_distance(a / na, b / nb)


def vertex_angles(T) -> np.ndarray:
    """Interior angles of a spherical triangle in S^2."""
    T = np.asarray(T, dtype=float)
    out = np.empty(3)
    for k in range(3):
        A, B, C = T[k], T[(k + 1) % 3], T[(k + 2) % 3]
        tb = B - (A @ B) * A
        tc = C - (A @ C) * A
        out[k] = _angle_between(tb, tc)
    return out


def spherical_triangle_area(T) -> float:
    """Area of a spherical triangle in S^2 by Girard's theorem."""
    T = unit_vectors(T)
    if T.shape != (3, 3):
        raise ValueError(f"expected three points of S^2, got shape {T.shape}")
    if abs(np.linalg.det(T)) <= 1e-12:
        raise ValueError("degenerate spherical triangle")
    return float(vertex_angles(T).sum() - math.pi)


def _tangent_basis(c: np.ndarray) -> np.ndarray:
    """Orthonormal basis of c^perp as the columns of a (d, d-1) matrix."""
    d = c.size
    # Householder reflection mapping e_1 to c; its other columns span c^perp.
    e = np.zeros(d)
    e[0] = 1.0
    w = c - e if c[0] < 0 else c + e
    H = np.eye(d) - 2.0 * np.outer(w, w) / (w @ w)
    return H[:, 1:]


def projection_center(V: np.ndarray) -> np.ndarray:
    """Tangent point for radial projection of the simplex spanned by the rows of ``V``.

    Chooses between the normalized centroid and the circumcenter direction,
    whichever sees the farthest vertex under the smaller angle.
    """
    cands = []
    s = V.sum(axis=0)
    if np.linalg.norm(s) > 1e-12:
        cands.append(s / np.linalg.norm(s))
    if V.shape[0] == V.shape[1]:
        try:
            w = np.linalg.solve(V, np.ones(V.shape[0]))
            cands.append(w / np.linalg.norm(w))
        except np.linalg.LinAlgError:
            pass
    best = max(cands, key=lambda c: float((V @ c).min()), default=None)
    if best is None or float((V @ best).min()) <= 1e-12:
        raise ValueError("simplex is not contained in an open hemisphere")
    return best


def tangent_projection(V: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Radial projection of the rows of ``V`` into the tangent plane at ``c``,
    in coordinates of an orthonormal basis of c^perp (origin at ``c``)."""
    B = _tangent_basis(c)
    Y = V / (V @ c)[:, None]
    return Y @ B


def spherical_simplex_volume(
    V, method: str = "auto", rtol: float = 1e-7, order: int = 8
) -> float:
    """Measure of the spherical simplex spanned by ``d`` points of S^{d-1}.

    ``method="auto"`` uses exact formulas for d=2 (arc) and d=3 (Girard) and
    tangent-plane cubature of the density ``(1+|y|^2)^(-d/2)`` otherwise;
    ``method="quadrature"`` forces the cubature path for any d >= 3.
    """
    V = unit_vectors(V)
    k, d = V.shape
    if k != d:
        raise ValueError(f"a spherical simplex in S^{d-1} needs {d} vertices, got {k}")
    gram = V @ V.T
    if np.linalg.det(gram) <= 1e-12:
        raise ValueError("degenerate simplex (Gram determinant <= 1e-12)")
    if d == 2:
        return geodesic_distance(V[0], V[1])
    if method == "auto" and d == 3:
        return spherical_triangle_area(V)
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    c = projection_center(V)
    P = tangent_projection(V, c)

    def density(y):
        return (1.0 + np.einsum("ij,ij->i", y, y)) ** (-d / 2.0)

    return integrate_simplex(density, P, order=order, rtol=rtol).value


@dataclass(frozen=True)
class Cap:
    """Closed spherical cap ``B(center, radius)``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", unit_vector(self.center))
        if not 0 < self.radius < math.pi / 2:
            raise ValueError("cap radius must lie in (0, pi/2)")

    @property
    def dim(self) -> int:
        return self.center.size

    def volume(self) -> float:
        return cap_volume(self.dim, self.radius)

    def contains(self, X, tol: float = 0.0) -> np.ndarray:
        return geodesic_distance(np.asarray(X), self.center) <= self.radius + tol


@dataclass(frozen=True)
class SphericalSimplex:
    """Spherical (d-1)-simplex given by ``d`` linearly independent unit vectors."""

    vertices: np.ndarray

    def __post_init__(self):
        V = unit_vectors(self.vertices)
        k, d = V.shape
        if k != d:
            raise ValueError(f"need {d} vertices in dimension {d}, got {k}")
        if np.linalg.det(V @ V.T) <= 1e-12:
            raise ValueError("vertices are linearly dependent")
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def volume(self, **kw) -> float:
        return spherical_simplex_volume(self.vertices, **kw)

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        """Cone-membership test: nonnegative coordinates in the vertex basis."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        coef = np.linalg.solve(self.vertices.T, X.T).T
        return (coef >= -tol).all(axis=1)
