"""Constructive recovery of a regular polytope from a near-optimal packing.

Each recovery returns an orthogonal map ``Phi`` and a matching ``sigma`` such
that every input point ``x_i`` lies within the certified distance of
``Phi v_sigma(i)``, where ``v`` runs over the reference vertices produced by
:func:`sphstab.polytopes.generate`.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cells import HypothesisError, delone_complex
from .lpbound import classify_crosspolytope_pairs, crosspolytope_eta
from .polytopes import generate, parse_kind, simplex_vertices, stability_constants
from .sphgeo import _tangent_basis, circumradius_rj, geodesic_distance, min_separation, unit_vectors

ORTHO_TOL = 1e-12
REGULAR_TOL = 1e-9
INNER_TOL = 1e-12
# Step-1 conclusion: every Delone cell has circumradius <= r_{d-1}(phi) + gamma * eps.
STEP1_GAMMA = {"icosahedron": 1e7, "cell600": 1e12}


@dataclass(frozen=True)
class Rotation:
    """An element of O(d)."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError(f"rotation must be square, got shape {M.shape}")
        err = float(np.abs(M.T @ M - np.eye(len(M))).max())
        if err > ORTHO_TOL:
            raise ValueError(f"matrix is not orthogonal (|M^T M - I| = {err:.3e})")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def apply(self, V) -> np.ndarray:
        """Image of the rows of ``V``."""
        return np.asarray(V, dtype=float) @ self.matrix.T

    @classmethod
    def nearest(cls, M) -> "Rotation":
        """Orthogonal polar factor of ``M``."""
        U, _, Vt = np.linalg.svd(np.asarray(M, dtype=float))
        return cls(U @ Vt)


@dataclass
class RecoveryResult:
    kind: str
    dim: int
    matching: np.ndarray
    rotation: Rotation
    reference: np.ndarray = field(repr=False)
    deviations: np.ndarray = field(repr=False)
    eps: float
    bound: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def matched_vertices(self) -> np.ndarray:
        """``Phi v_sigma(i)`` for each input point ``i``."""
        return self.rotation.apply(self.reference[self.matching])

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max())

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.bound + 1e-9

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "eps": self.eps,
            "matching": self.matching.tolist(),
            "rotation": self.rotation.matrix.tolist(),
            "deviations": self.deviations.tolist(),
            "max_deviation": self.max_deviation,
            "bound": self.bound,
            "pass": self.passed,
            "diagnostics": self.diagnostics,
        }


def _deviations(X: np.ndarray, rot: Rotation, ref: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    return np.atleast_1d(geodesic_distance(X, rot.apply(ref[sigma])))


def _fit_map(src: np.ndarray, dst: np.ndarray) -> Rotation:
    """Orthogonal least-squares map sending the rows of ``src`` to those of ``dst``."""
    return Rotation.nearest(dst.T @ src)


# Almost orthogonal vectors.

def almost_orthogonal_basis(u, eta: float) -> np.ndarray:
    """Orthonormal v_1..v_n close to nearly orthogonal unit vectors u_1..u_n.

    Follows the inductive construction: v_n = u_n, the remaining vectors are
    projected to v_n^perp, normalized, and handled recursively.  The result
    satisfies lin{u_i..u_n} = lin{v_i..v_n}, <u_i, v_i> > 0 and
    |<u_i, v_j>| <= eta / (1 - (n-2) eta) for i != j.
    """
    U = unit_vectors(u)
    n = len(U)
    if n < 1:
        raise ValueError("need at least one vector")
    if n > U.shape[1]:
        raise ValueError(f"{n} vectors cannot be independent in R^{U.shape[1]}")
    if eta < 0 or (n > 1 and eta >= 1.0 / (n - 1)):
        raise ValueError(f"eta must lie in [0, 1/(n-1)) = [0, {1.0 / max(n - 1, 1)!r}), got {eta!r}")
    if n > 1:
        G = U @ U.T
        off = float(np.abs(G[~np.eye(n, dtype=bool)]).max())
        if off > eta + INNER_TOL:
            raise ValueError(f"max |<u_i,u_j>| = {off!r} exceeds eta = {eta!r}")
    V = np.empty_like(U)
    for i in range(n - 1, -1, -1):
        w = U[i].copy()
        # Two passes of projection keep the basis orthonormal to rounding.
        for _ in range(2):
            w -= V[i + 1:].T @ (V[i + 1:] @ w)
        V[i] = w / np.linalg.norm(w)
    return V


def almost_orthogonal_bound(n: int, eta: float) -> float:
    """The off-diagonal bound eta / (1 - (n-2) eta)."""
    return eta / (1.0 - (n - 2) * eta) if n > 1 else 0.0


# Simplices.

def _plane_rotation(q: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Rotation fixing lin{e, q}^perp pointwise and sending q to e.

    Built as the product of two Householder reflections: the first swaps q
    and e, the second fixes e and restores orientation.  Both normals come
    from the half-angle form, which stays accurate as q approaches e.
    """
    m = q.size
    p = q - (q @ e) * e
    s = float(np.linalg.norm(p))
    if s == 0.0:
        if q @ e < 0:
            raise ValueError("q = -e: the rotation plane is undefined")
        return np.eye(m)
    u = p / s
    half = 0.5 * math.atan2(s, float(q @ e))
    n1 = math.cos(half) * u - math.sin(half) * e
    H1 = np.eye(m) - 2.0 * np.outer(n1, n1)
    H2 = np.eye(m) - 2.0 * np.outer(u, u)
    return H2 @ H1


def _wrap(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _recover_triangle(U: np.ndarray) -> tuple[np.ndarray, dict]:
    """Regular triangle on S^1 anchored symmetrically on the closest pair."""
    th = np.arctan2(U[:, 1], U[:, 0])
    best = None
    for a, b in ((0, 1), (0, 2), (1, 2)):
        gap = abs(_wrap(th[b] - th[a]))
        if best is None or gap < best[0]:
            best = (gap, a, b)
    _, a, b = best
    o = 3 - a - b
    diff = _wrap(th[b] - th[a])
    mid = th[a] + diff / 2.0
    sgn = 1.0 if diff >= 0 else -1.0
    ang = np.empty(3)
    ang[a] = mid - sgn * math.pi / 3.0
    ang[b] = mid + sgn * math.pi / 3.0
    ang[o] = mid + math.pi
    V = np.c_[np.cos(ang), np.sin(ang)]
    return V, {"anchor_pair": [int(a), int(b)], "minimax_deviation": _minimax_triangle(th, ang)}


def _minimax_triangle(th: np.ndarray, ang: np.ndarray) -> float:
    """Smallest achievable max deviation over rotations of the fitted triangle."""
    def cost(s):
        return float(np.abs(_wrap(th - ang - s)).max())

    lo, hi = -math.pi / 3.0, math.pi / 3.0
    for _ in range(200):
        m1, m2 = lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0
        if cost(m1) <= cost(m2):
            hi = m2
        else:
            lo = m1
    return cost((lo + hi) / 2.0)


def _regular_simplex_fit(U: np.ndarray, eps: float) -> tuple[np.ndarray, dict]:
    """Lift to R^{d+1}, orthonormalize, rotate the barycenter to e, project back."""
    n, d = U.shape
    W = np.hstack([math.sqrt(d / (d + 1.0)) * U, np.full((n, 1), math.sqrt(1.0 / (d + 1.0)))])
    eta = 1.5 * d * d * eps
    Q = almost_orthogonal_basis(W, eta)
    q = Q.sum(axis=0) / math.sqrt(d + 1.0)
    e = np.zeros(d + 1)
    e[-1] = 1.0
    A = _plane_rotation(q, e)
    Qb = Q @ A.T
    V = math.sqrt((d + 1.0) / d) * (Qb - e / math.sqrt(d + 1.0))
    V = V[:, :d]
    V /= np.linalg.norm(V, axis=1)[:, None]
    diag = {
        "eta": eta,
        "measured_eta": float(np.abs((W @ W.T)[~np.eye(n, dtype=bool)]).max()),
        "q_to_e": float(np.linalg.norm(q - e)),
    }
    return V, diag


def recover_simplex(u, eps: float, check: bool = True) -> RecoveryResult:
    """Regular simplex within 9 d^3.5 eps (3 eps for d = 2) of d+1 points.

    Requires pairwise distances >= acos(-1/d) - 2 eps and eps < eps_d.
    """
    U = unit_vectors(u)
    n, d = U.shape
    if n != d + 1:
        raise ValueError(f"a simplex in S^{d - 1} has {d + 1} vertices, got {n}")
    c, eps_max = stability_constants("simplex", d)
    if eps < 0 or eps >= eps_max:
        raise ValueError(f"eps must lie in [0, {eps_max!r}) for d={d}")
    if check:
        need = math.acos(-1.0 / d) - 2.0 * eps
        sep = min_separation(U)
        if sep < need - 1e-12:
            raise HypothesisError(f"min separation {sep!r} < acos(-1/d) - 2 eps = {need!r}")
    if d == 2:
        V, diag = _recover_triangle(U)
    else:
        V, diag = _regular_simplex_fit(U, eps)
    ref = simplex_vertices(d)
    rot = _fit_map(ref, V)
    sigma = np.arange(n)
    dev = _deviations(U, rot, ref, sigma)
    diag["construction_deviation"] = float(np.atleast_1d(geodesic_distance(U, V)).max())
    return RecoveryResult("simplex", d, sigma, rot, ref, dev, eps, c * eps, diag)


# Crosspolytopes.

def recover_crosspolytope(x, eps: float) -> RecoveryResult:
    """Orthonormal frame whose +-vectors are within 96 d^3 eps of 2d points."""
    X = unit_vectors(x)
    k, d = X.shape
    if k > 2 * d:
        raise HypothesisError(f"{k} points exceed the 2d = {2 * d} allowed by the LP bound")
    if k != 2 * d:
        raise ValueError(f"need exactly 2d = {2 * d} points, got {k}")
    c, eps_max = stability_constants("crosspolytope", d)
    if eps < 0 or eps >= eps_max:
        raise ValueError(f"eps must lie in [0, {eps_max!r}) for d={d}")
    sep = min_separation(X)
    if sep < math.pi / 2.0 - 2.0 * eps - 1e-12:
        raise HypothesisError(f"min separation {sep!r} < pi/2 - 2 eps")
    pairs = classify_crosspolytope_pairs(X, eps)
    reps = [i for i in range(k) if i < pairs.opposite[i]]
    eta = crosspolytope_eta(d, eps)
    W = almost_orthogonal_basis(X[reps], eta)
    sigma = np.empty(k, dtype=int)
    for j, i in enumerate(reps):
        sigma[i] = j
        sigma[pairs.opposite[i]] = j + d
    ref = np.vstack([np.eye(d), -np.eye(d)])
    rot = Rotation.nearest(W.T)
    dev = _deviations(X, rot, ref, sigma)
    rep_dev = dev[reps]
    diag = {
        "eta": eta,
        "representatives": reps,
        "max_representative_deviation": float(rep_dev.max()),
        "representative_bound": 2.0 * d * eta,
        "opposite_bound": 6.0 * d * eta,
    }
    return RecoveryResult("crosspolytope", d, sigma, rot, ref, dev, eps, c * eps, diag)


# Chaining across facets.

def reflect_vertex(facet, v0) -> np.ndarray:
    """Mirror image of ``v0`` in the great subsphere through the d-1 facet points."""
    F = unit_vectors(facet)
    v0 = unit_vectors(v0)[0]
    k, d = F.shape
    if k != d - 1:
        raise ValueError(f"a facet in S^{d - 1} has {d - 1} vertices, got {k}")
    S = np.vstack([F, v0])
    G = S @ S.T
    off = G[~np.eye(d, dtype=bool)]
    if float(off.max() - off.min()) > REGULAR_TOL:
        raise ValueError("facet and v0 do not form a regular simplex")
    # Normal of the hyperplane spanned by the facet points.
    _, _, Vt = np.linalg.svd(F)
    nrm = Vt[-1]
    out = v0 - 2.0 * (v0 @ nrm) * nrm
    return out / np.linalg.norm(out)


@lru_cache(maxsize=None)
def _reference_complex(kind: str):
    spec = generate(kind)
    return spec, delone_complex(spec.vertices)


def _cell_fit(X: np.ndarray, cell: np.ndarray, center: np.ndarray, r: float) -> np.ndarray:
    """Exact regular simplex of circumradius ``r`` about ``center`` fitted to a Delone cell.

    The cell's tangent directions at the circumcenter are fitted by a regular
    simplex one dimension down, then lifted back onto the sphere.
    """
    d = X.shape[1]
    B = _tangent_basis(center)
    T = X[cell] @ B
    T /= np.linalg.norm(T, axis=1)[:, None]
    m = d - 1
    sep = min_separation(T)
    local_eps = max(0.0, (math.acos(-1.0 / m) - sep) / 2.0)
    fit = recover_simplex(T, local_eps, check=False)
    Wt = fit.matched_vertices
    return math.cos(r) * center[None, :] + math.sin(r) * (Wt @ B.T)


def recover_global(points, kind: str, eps: float) -> RecoveryResult:
    """Icosahedron / 600-cell recovery by local cell fits chained across facets."""
    kind, d = parse_kind(kind)
    if kind not in STEP1_GAMMA:
        raise ValueError("recover_global handles the icosahedron and the 600-cell")
    X = unit_vectors(points)
    if X.shape[1] != d:
        raise ValueError(f"{kind} lives in dimension {d}, got points in R^{X.shape[1]}")
    ref_spec, ref_cx = _reference_complex(kind)
    phi, f0 = ref_spec.phi, ref_spec.f0
    c_P, eps_P = ref_spec.stability
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if len(X) < f0:
        raise HypothesisError(f"need at least f0 = {f0} points, got {len(X)}")
    sep = min_separation(X)
    if sep < 2.0 * (phi - eps) - 1e-12:
        raise HypothesisError(f"min separation {sep!r} < 2(phi - eps) = {2 * (phi - eps)!r}")

    cx = delone_complex(X)
    gamma = STEP1_GAMMA[kind]
    r_cell = circumradius_rj(d - 1, phi)
    step1 = r_cell + gamma * eps
    radii = cx.circumradii
    if radii.max() > step1 + 1e-12:
        bad = int(np.argmax(radii))
        raise HypothesisError(
            f"Delone cell {bad} {cx.cells[bad].tolist()} has circumradius {radii[bad]!r} > {step1!r}"
        )
    if len(X) != f0:
        raise HypothesisError(f"k = {len(X)} != f0 = {f0}")

    fits = [_cell_fit(X, c, z, r_cell) for c, z in zip(cx.cells, cx.circumcenters)]
    seed = int(np.argmin(np.abs(radii - r_cell)))

    # Breadth-first chain: labels give the matching, positions the chained polytope.
    R = ref_spec.vertices
    ref_cell = ref_cx.cells[0]
    labels = -np.ones(len(X), dtype=int)
    chain = np.full_like(X, np.nan)
    labels[cx.cells[seed]] = ref_cell
    chain[cx.cells[seed]] = fits[seed]
    spread = 0.0
    visited = {seed}
    queue = deque([seed])
    adj = cx.adjacency
    while queue:
        f = queue.popleft()
        cf = cx.cells[f]
        for g in adj[f]:
            if g in visited:
                continue
            cg = cx.cells[g]
            shared = [i for i in cf if i in cg]
            apex = [i for i in cf if i not in cg][0]
            new = [i for i in cg if i not in cf][0]
            pos = reflect_vertex(chain[shared], chain[apex])
            ref_pos = reflect_vertex(R[labels[shared]], R[labels[apex]])
            lab = int(np.argmin(np.linalg.norm(R - ref_pos, axis=1)))
            if np.linalg.norm(R[lab] - ref_pos) > 1e-9:
                raise ArithmeticError("reference reflection missed the vertex set")
            if labels[new] >= 0:
                if labels[new] != lab:
                    raise HypothesisError(f"inconsistent matching at point {new}")
                spread = max(spread, float(geodesic_distance(chain[new], pos)))
            else:
                labels[new] = lab
                chain[new] = pos
            visited.add(g)
            queue.append(g)
    if (labels < 0).any() or len(set(labels.tolist())) != f0:
        raise HypothesisError("chaining did not produce a bijective matching")
    c_chain = 16.0 * math.sqrt(d - 1.0) / math.sin(phi)
    spread_limit = max(10.0 * c_chain * eps, 1e-9)
    if spread > spread_limit:
        raise HypothesisError(f"duplicate chain estimates spread {spread!r} > {spread_limit!r}")

    # Consensus of all local fits, then one orthogonal fit to the reference.
    acc = np.zeros_like(X)
    for c, W in zip(cx.cells, fits):
        acc[c] += W
    est = acc / np.linalg.norm(acc, axis=1)[:, None]
    rot = _fit_map(R[labels], est)
    dev = _deviations(X, rot, R, labels)
    chain_dev = float(np.atleast_1d(geodesic_distance(X, chain)).max())
    diag = {
        "k": int(len(X)),
        "max_circumradius": float(radii.max()),
        "step1_bound": step1,
        "seed_cell": seed,
        "chain_deviation": chain_dev,
        "duplicate_spread": spread,
        "spread_limit": spread_limit,
        "empirical_ratio": float(dev.max() / eps) if eps > 0 else None,
        "paper_constant": c_P,
        "paper_constant_tight": False,
    }
    return RecoveryResult(kind, d, labels, rot, R, dev, eps, c_P * eps, diag)


def recover(points, kind: str, dim: int | None = None, eps: float = 0.0) -> RecoveryResult:
    """Dispatch to the recovery routine for ``kind``."""
    kind, d = parse_kind(kind, dim if dim is not None else np.asarray(points).shape[-1])
    if kind == "simplex":
        return recover_simplex(points, eps)
    if kind == "crosspolytope":
        return recover_crosspolytope(points, eps)
    return recover_global(points, kind, eps)


# Procrustes oracle.

@dataclass
class ProcrustesResult:
    rotation: Rotation
    matching: np.ndarray
    deviations: np.ndarray = field(repr=False)
    degenerate: bool
    iterations: int

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max())


def _clique(P: np.ndarray, d: int, target: float, tol: float) -> list[int]:
    """Greedy set of d points with pairwise distances within ``tol`` of ``target``."""
    D = np.asarray(geodesic_distance(P[:, None, :], P[None, :, :]))
    chosen = [0]
    for j in np.argsort(D[0]):
        if len(chosen) == d:
            break
        if j in chosen:
            continue
        if all(abs(D[j, i] - target) <= tol for i in chosen):
            chosen.append(int(j))
    if len(chosen) < d:
        raise ValueError("could not find an anchor facet")
    return chosen


def procrustes_align(points, reference, matching=None, max_iter: int = 50) -> ProcrustesResult:
    """Orthogonal map and matching minimizing sum |Phi v_sigma(i) - x_i|^2.

    Without a matching, an anchor facet of mutually nearest points is matched
    to one of the reference, then assignment (Hungarian) and orthogonal
    Procrustes steps alternate until the matching is stable.
    """
    X = unit_vectors(points)
    R = unit_vectors(reference)
    if X.shape != R.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {R.shape}")
    d = X.shape[1]
    if matching is not None:
        sigma = np.asarray(matching, dtype=int)
        it = 0
    else:
        Dr = np.asarray(geodesic_distance(R[:, None, :], R[None, :, :]))
        target = float(Dr[np.triu_indices(len(R), 1)].min())
        tol = 0.25 * target
        ax, ar = _clique(X, d, target, tol), _clique(R, d, target, tol)
        rot = _fit_map(R[ar], X[ax])
        sigma = None
        for it in range(1, max_iter + 1):
            C = -X @ rot.apply(R).T
            _, new = linear_sum_assignment(C)
            if sigma is not None and np.array_equal(new, sigma):
                break
            sigma = new
            rot = _fit_map(R[sigma], X)
    M = X.T @ R[sigma]
    s = np.linalg.svd(M, compute_uv=False)
    degenerate = bool(s[-1] <= 1e-12 * s[0])
    rot = _fit_map(R[sigma], X)
    dev = _deviations(X, rot, R, sigma)
    return ProcrustesResult(rot, sigma, dev, degenerate, it)
