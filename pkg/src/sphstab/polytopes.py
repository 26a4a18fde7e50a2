"""Vertex sets and metadata of the simplicial regular polytopes on S^{d-1}."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .sphgeo import min_separation, pairwise_distances, unit_vectors

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0

KINDS = ("simplex", "crosspolytope", "icosahedron", "cell600")

PHI_ICOSAHEDRON = 0.5 * math.acos(1.0 / math.sqrt(5.0))
PHI_600 = math.pi / 10.0


@dataclass(frozen=True)
class PolytopeSpec:
    kind: str
    dim: int
    phi: float
    f0: int
    vertices: np.ndarray = field(repr=False)
    stability: tuple[float, float]

    @property
    def c_P(self) -> float:
        return self.stability[0]

    @property
    def eps_P(self) -> float:
        return self.stability[1]

    @property
    def label(self) -> str:
        return f"{self.kind}{self.dim}" if self.kind in ("simplex", "crosspolytope") else self.kind


def parse_kind(kind: str, dim: int | None = None) -> tuple[str, int]:
    """Normalize ``kind`` (optionally ``"simplex:4"`` style) to ``(kind, d)``."""
    name = kind.strip().lower().replace("-", "").replace("_", "")
    if ":" in name:
        name, ds = name.split(":", 1)
        dim = int(ds)
    aliases = {"cross": "crosspolytope", "cell600": "cell600", "600cell": "cell600",
               "icosa": "icosahedron"}
    name = aliases.get(name, name)
    if name not in KINDS:
        raise ValueError(f"unsupported polytope kind {kind!r}; expected one of {KINDS}")
    if name == "icosahedron":
        if dim not in (None, 3):
            raise ValueError("the icosahedron lives in dimension 3")
        return name, 3
    if name == "cell600":
        if dim not in (None, 4):
            raise ValueError("the 600-cell lives in dimension 4")
        return name, 4
    if dim is None or dim < 2:
        raise ValueError(f"{name} needs a dimension d >= 2")
    return name, int(dim)


def simplex_vertices(d: int) -> np.ndarray:
    """Regular simplex with pairwise inner products exactly -1/d (to rounding)."""
    G = np.full((d, d), -1.0 / d)
    np.fill_diagonal(G, 1.0)
    L = np.linalg.cholesky(G)
    last = -L.sum(axis=0)
    return np.vstack([L, last])


def crosspolytope_vertices(d: int) -> np.ndarray:
    eye = np.eye(d)
    return np.vstack([eye, -eye])


def icosahedron_vertices() -> np.ndarray:
    pts = []
    for s1, s2 in itertools.product((1.0, -1.0), repeat=2):
        base = (0.0, s1, s2 * GOLDEN)
        for k in range(3):
            pts.append(base[-k:] + base[:-k] if k else base)
    V = np.array(pts) / math.sqrt(1.0 + GOLDEN**2)
    return V[np.lexsort(V.T[::-1])]


def _even_permutations(n: int):
    for p in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        if inv % 2 == 0:
            yield p


def cell600_vertices() -> np.ndarray:
    """The 120 unit quaternions of the binary icosahedral group."""
    pts = set()
    for i in range(4):
        for s in (1.0, -1.0):
            v = [0.0] * 4
            v[i] = s
            pts.add(tuple(v))
    for signs in itertools.product((0.5, -0.5), repeat=4):
        pts.add(signs)
    base = (GOLDEN / 2.0, 0.5, 1.0 / (2.0 * GOLDEN), 0.0)
    for perm in _even_permutations(4):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            v = [base[0] * signs[0], base[1] * signs[1], base[2] * signs[2], 0.0]
            pts.add(tuple(round(v[perm.index(k)], 15) + 0.0 for k in range(4)))
    V = np.array(sorted(pts))
    V /= np.linalg.norm(V, axis=1)[:, None]
    return V[np.lexsort(V.T[::-1])]


def stability_constants(kind: str, dim: int | None = None) -> tuple[float, float]:
    """Certified ``(c_P, eps_P)`` for the stability statement (not tight)."""
    kind, d = parse_kind(kind, dim)
    if kind == "simplex":
        if d == 2:
            return 3.0, math.pi / 12.0
        c = 9.0 * d**3.5
        return c, 1.0 / c
    if kind == "crosspolytope":
        return 96.0 * d**3, 1.0 / (64.0 * d**4)
    if kind == "icosahedron":
        gamma = 1e7
        return 44.0**9 * 25.0 * gamma, 1e-9
    gamma = 1e12
    return 90.0**116 * 1e4 * gamma, 1e-14


def generate(kind: str, dim: int | None = None) -> PolytopeSpec:
    kind, d = parse_kind(kind, dim)
    if kind == "simplex":
        V, f0, phi = simplex_vertices(d), d + 1, 0.5 * math.acos(-1.0 / d)
    elif kind == "crosspolytope":
        V, f0, phi = crosspolytope_vertices(d), 2 * d, math.pi / 4.0
    elif kind == "icosahedron":
        V, f0, phi = icosahedron_vertices(), 12, PHI_ICOSAHEDRON
    else:
        V, f0, phi = cell600_vertices(), 120, PHI_600
    assert V.shape == (f0, d)
    V.setflags(write=False)
    return PolytopeSpec(kind, d, phi, f0, V, stability_constants(kind, d))


@dataclass
class PackingReport:
    n_points: int
    min_distance: float
    required_distance: float
    separation_ok: bool
    covering_ok: bool
    max_gap: float
    origin_interior: bool

    @property
    def valid(self) -> bool:
        return self.separation_ok


def origin_in_interior(X) -> bool:
    """True iff the origin is an interior point of conv(X).

    Equivalent to every open hemisphere containing a point of X.  Decided by
    the LP  max s  s.t.  sum l_i x_i = 0, sum l_i = 1, l_i >= s.
    """
    X = np.asarray(X, dtype=float)
    k, d = X.shape
    if np.linalg.matrix_rank(X) < d:
        return False
    # variables: l_1..l_k, s ; minimize -s
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_eq = np.zeros((d + 1, k + 1))
    A_eq[:d, :k] = X.T
    A_eq[d, :k] = 1.0
    b_eq = np.zeros(d + 1)
    b_eq[d] = 1.0
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    b_ub = np.zeros(k)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(0, None)] * k + [(None, None)], method="highs")
    return bool(res.status == 0 and -res.fun > 1e-12)


def validate_packing(points, phi: float, eps: float, n_samples: int = 100_000,
                     seed: int = 0) -> PackingReport:
    """Check the packing hypothesis (separation >= 2(phi-eps)) and report
    saturation and whether o is interior.

    Saturation means every point of the sphere lies strictly closer than
    2(phi-eps) to some center.  The covering radius is estimated from
    ``n_samples`` uniform points, and raised to pi/2 when all centers fit in
    a closed hemisphere.
    """
    X = unit_vectors(points)
    if len(X) < 2:
        raise ValueError("a packing needs at least 2 points")
    required = 2.0 * (phi - eps)
    dmin = min_separation(X)
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(n_samples, X.shape[1]))
    S /= np.linalg.norm(S, axis=1)[:, None]
    gap = 0.0
    for chunk in np.array_split(S, max(1, n_samples // 20000)):
        ip = np.clip(chunk @ X.T, -1.0, 1.0).max(axis=1)
        gap = max(gap, float(np.arccos(ip.min())))
    interior = origin_in_interior(X)
    if not interior:
        # Some closed hemisphere holds every point; its pole is >= pi/2 away.
        gap = max(gap, math.pi / 2.0)
    return PackingReport(
        n_points=len(X),
        min_distance=dmin,
        required_distance=required,
        separation_ok=bool(dmin >= required - 1e-12),
        covering_ok=bool(gap < required),
        max_gap=gap,
        origin_interior=interior,
    )


def edge_length_check(spec: PolytopeSpec) -> float:
    """Largest |Euclidean edge - 2 sin(phi_P)| over minimal-distance pairs."""
    D = pairwise_distances(spec.vertices)
    iu = np.triu_indices(spec.f0, 1)
    dmin = D[iu].min()
    V = spec.vertices
    pairs = [(i, j) for i, j in zip(*iu) if D[i, j] <= dmin + 1e-9]
    chords = [np.linalg.norm(V[i] - V[j]) for i, j in pairs]
    return max(abs(c - 2.0 * math.sin(spec.phi)) for c in chords)
