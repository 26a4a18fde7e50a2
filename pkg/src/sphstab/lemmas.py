"""Numerical checks of the volume, density and elementary geometric inequalities
used in the stability proofs for the icosahedron and the 600-cell.

Every check produces rows ``(lemma, params, lhs, rhs, relation, slack, passed)``
with ``slack >= 0`` exactly when the inequality holds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .densities import build_orthoscheme, delta, regular_params
from .polytopes import PHI_600, PHI_ICOSAHEDRON, simplex_vertices
from .sphgeo import (
    circumradius_rinf,
    circumradius_rj,
    sphere_measure,
    spherical_simplex_volume,
)

DEFAULT_EPS_GRID = (1e-8, 1e-7, 1e-6, 1e-5)
# Below-grid values so that every gamma has admissible eps under eps < 1/(100 gamma).
EXTENDED_EPS_GRID = tuple(10.0**-k for k in range(5, 13))
ICOSA_GAMMAS = (1e4, 1e5, 1e6, 1e7)
CELL600_GAMMAS = (1e6, 1e7, 1e8)
LEMMA_TOL = 1e-12
ICOSA_ETA_REPAIRED = 0.09
# Printed side conditions that do not hold numerically (see the repaired rows).
KNOWN_ERRATA = frozenset({"icosa-step1-eta"})


@dataclass
class LemmaRow:
    lemma: str
    params: dict
    lhs: float
    rhs: float
    relation: str
    slack: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        if self.relation in ("<", "<="):
            self.slack = self.rhs - self.lhs
        elif self.relation in (">", ">="):
            self.slack = self.lhs - self.rhs
        else:
            raise ValueError(f"unknown relation {self.relation!r}")
        if len(self.relation) == 1:
            self.passed = bool(self.slack > 0)
        else:
            scale = max(1.0, abs(self.lhs), abs(self.rhs))
            self.passed = bool(self.slack >= -LEMMA_TOL * scale)

    def as_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "slack": self.slack,
            "pass": self.passed,
        }


def aleph(d: int, phi: float) -> float:
    return d * 2.0 ** ((d + 3) / 2.0) / math.sin(circumradius_rj(d - 1, phi))


def phi_ceiling(d: int) -> float:
    """Upper end of the admissible phi range for the regular-orthoscheme lemmas."""
    return math.asin(math.sqrt(d / (4.0 * (d - 1.0))))


def _volume(t) -> float:
    return build_orthoscheme(t).volume()


def _is_close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12


def lemma_shrunk_volume(d: int, phi: float, eps: float) -> LemmaRow:
    """|Theta(r(phi-eps))| > |Theta(r(phi))| (1 - aleph eps) for eps in (0, phi)."""
    if not 0.0 < eps < phi:
        raise ValueError("eps must lie in (0, phi)")
    a = aleph(d, phi)
    lhs = _volume(regular_params(d, phi - eps))
    rhs = _volume(regular_params(d, phi)) * (1.0 - a * eps)
    return LemmaRow("volume-shrink", {"d": d, "phi": phi, "eps": eps, "aleph": a}, lhs, rhs, ">")


def lemma_shrunk_density(d: int, phi: float, eps: float) -> LemmaRow:
    """Delta(r(phi-eps)) <= Delta(r(phi)) (1 + 2 aleph eps) for eps < 1/(2 aleph)."""
    a = aleph(d, phi)
    if not 0.0 < eps < 1.0 / (2.0 * a):
        raise ValueError("eps must lie in (0, 1/(2 aleph))")
    lhs = delta(regular_params(d, phi - eps))
    rhs = delta(regular_params(d, phi)) * (1.0 + 2.0 * a * eps)
    return LemmaRow("density-shrink", {"d": d, "phi": phi, "eps": eps, "aleph": a}, lhs, rhs, "<=")


def lemma_long_excess(d: int, phi: float, t: float) -> LemmaRow:
    """|Theta~(phi,t) minus Theta~(phi,r_{d-1})| >= (t - r_{d-1})/2^d |Theta~(phi,r_{d-1})|.

    The difference is itself the spherical simplex obtained by replacing
    z_{d-2} with z_{d-1}(r_{d-1}); its volume is computed directly.
    """
    if not phi < t < math.pi / 3:
        raise ValueError("t must lie in (phi, pi/3)")
    base = regular_params(d, phi)
    r = base[-1]
    small = build_orthoscheme(base)
    rhs = max(0.0, t - r) / 2.0**d * small.volume()
    if t <= r:
        lhs = 0.0
    else:
        big = build_orthoscheme(base[:-1] + (t,))
        V = np.vstack([big.vertices[: d - 2], small.vertices[d - 1], big.vertices[d - 1]])
        lhs = spherical_simplex_volume(V, method="auto", rtol=1e-11)
    return LemmaRow("long-excess", {"d": d, "phi": phi, "t": t}, lhs, rhs, ">=")


def icosa_density_bound(eps: float) -> LemmaRow:
    """Delta(phi_I - eps, r_2(phi_I - eps)) < 3/pi + 80 eps for eps in (0, 0.01)."""
    if not 0.0 < eps < 0.01:
        raise ValueError("eps must lie in (0, 0.01)")
    lhs = delta(regular_params(3, PHI_ICOSAHEDRON - eps))
    return LemmaRow("icosa-density", {"eps": eps}, lhs, 3.0 / math.pi + 80.0 * eps, "<")


def cell600_density_bound(eps: float) -> LemmaRow:
    """Delta(phi_Q - eps, r_2(.), r_3(.)) < 60/pi^2 + 1500 eps for eps in (0, 0.004)."""
    if not 0.0 < eps < 0.004:
        raise ValueError("eps must lie in (0, 0.004)")
    lhs = delta(regular_params(4, PHI_600 - eps))
    return LemmaRow("600-density", {"eps": eps}, lhs, 60.0 / math.pi**2 + 1500.0 * eps, "<")


def icosa_long_density(gamma: float, eps: float) -> LemmaRow:
    """Delta(phi_I - eps, r_2(phi_I) + gamma eps) <= 3/pi - gamma eps / 200."""
    if gamma < 1e4 or not 0.0 < eps < 1.0 / (100.0 * gamma):
        raise ValueError("need gamma >= 1e4 and eps in (0, 1/(100 gamma))")
    phi = PHI_ICOSAHEDRON
    lhs = delta((phi - eps, circumradius_rj(2, phi) + gamma * eps))
    rhs = delta(regular_params(3, phi)) - gamma * eps / 200.0
    return LemmaRow("icosa-long-density", {"gamma": gamma, "eps": eps}, lhs, rhs, "<=")


def cell600_long_density(gamma: float, eps: float) -> LemmaRow:
    """Delta(phi_Q - eps, r_2(phi_Q - eps), r_3(phi_Q) + gamma eps) <= 60/pi^2 - gamma eps / 100."""
    if gamma < 1e6 or not 0.0 < eps < 1.0 / (100.0 * gamma):
        raise ValueError("need gamma >= 1e6 and eps in (0, 1/(100 gamma))")
    phi = PHI_600
    t = (phi - eps, circumradius_rj(2, phi - eps), circumradius_rj(3, phi) + gamma * eps)
    lhs = delta(t)
    rhs = delta(regular_params(4, phi)) - gamma * eps / 100.0
    return LemmaRow("600-long-density", {"gamma": gamma, "eps": eps}, lhs, rhs, "<=")


def icosa_delta0(eps0: float = 1e-6) -> float:
    """1 / |B(z_0, r_2(phi_I - eps0))|: per-unit-cap density bound on the excess triangle."""
    r = circumradius_rj(2, PHI_ICOSAHEDRON - eps0)
    return 1.0 / (2.0 * math.pi * (1.0 - math.cos(r)))


def cell600_delta0(eps0: float = 1e-8) -> float:
    """(1 - cos alpha) / (2 |C_0|) for the rotated-triangle cone C_0.

    C_0 has apex z_0, height phi - eps0 and a base disc of angular radius
    xi about z_1; its volume is integrated in the tangent space at z_1.
    """
    phi = PHI_600 - eps0
    r3 = circumradius_rj(3, phi)
    xi = math.acos(math.cos(r3) / math.cos(phi))
    rho, h = math.tan(xi), math.tan(phi)
    # Inner radial integral in closed form: int_0^R 2 pi r (1+t^2+r^2)^-2 dr.
    vol, _ = integrate.quad(
        lambda t: math.pi * (1.0 / (1.0 + t * t) - 1.0 / (1.0 + t * t + (rho * (1.0 - t / h)) ** 2)),
        0.0, h, epsabs=0, epsrel=1e-13,
    )
    cos_alpha = math.tan(phi) / math.tan(r3)
    return (1.0 - cos_alpha) / (2.0 * vol)


def _admissible(eps_grid, upper: float):
    return [e for e in eps_grid if 0.0 < e < upper]


def verify_volume_lemmas(phi: float, d: int, eps_grid=None, gamma=None, t_grid=None,
                         long_eps_grid=None) -> list[LemmaRow]:
    """Evaluate both sides of the regular-orthoscheme lemmas on a grid.

    The general lemmas (volume shrink, density shrink, long excess) run for
    any admissible ``phi``; the icosahedron- and 600-cell-specific bounds are
    added when ``(d, phi)`` is one of those two configurations.  ``gamma`` may
    be a number or a sequence; values outside each lemma's range are dropped.
    The large-gamma bounds use ``long_eps_grid`` (default: the grid extended
    down to 1e-12), since eps < 1/(100 gamma) empties the standard grid.
    """
    if d < 3:
        raise ValueError("the volume lemmas need d >= 3")
    if not 0.0 < phi < phi_ceiling(d):
        raise ValueError(f"phi must lie in (0, {phi_ceiling(d)!r}) for d={d}")
    grid = tuple(DEFAULT_EPS_GRID if eps_grid is None else eps_grid)
    long_grid = tuple(EXTENDED_EPS_GRID if long_eps_grid is None else long_eps_grid)
    rows: list[LemmaRow] = []
    for e in _admissible(grid, phi):
        rows.append(lemma_shrunk_volume(d, phi, e))
    for e in _admissible(grid, 1.0 / (2.0 * aleph(d, phi))):
        rows.append(lemma_shrunk_density(d, phi, e))
    r = circumradius_rj(d - 1, phi)
    if t_grid is None:
        t_grid = [r + s for s in (1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2)]
    for t in t_grid:
        if phi < t < math.pi / 3:
            rows.append(lemma_long_excess(d, phi, t))

    if d == 3 and _is_close(phi, PHI_ICOSAHEDRON):
        gammas = ICOSA_GAMMAS if gamma is None else np.atleast_1d(gamma)
        for e in _admissible(grid, 0.01):
            rows.append(icosa_density_bound(e))
        for g in gammas:
            if g >= 1e4:
                for e in _admissible(long_grid, 1.0 / (100.0 * g)):
                    rows.append(icosa_long_density(float(g), e))
    if d == 4 and _is_close(phi, PHI_600):
        gammas = CELL600_GAMMAS if gamma is None else np.atleast_1d(gamma)
        for e in _admissible(grid, 0.004):
            rows.append(cell600_density_bound(e))
        for g in gammas:
            if g >= 1e6:
                for e in _admissible(long_grid, 1.0 / (100.0 * g)):
                    rows.append(cell600_long_density(float(g), e))
    return rows


def proof_constant_checks() -> list[LemmaRow]:
    """Numerical side conditions quoted in the icosahedron and 600-cell arguments."""
    rows: list[LemmaRow] = []
    pi = math.pi

    # Icosahedron.
    phi = PHI_ICOSAHEDRON
    r2, rinf = circumradius_rj(2, phi), circumradius_rinf(phi)
    eps0, eta, gamma = 1e-9, 0.11, 1e7
    rows += [
        LemmaRow("icosa-aleph", {}, aleph(3, phi), 40.0, "<"),
        LemmaRow("icosa-aleph-factor", {}, 3.0 / pi * 2.0 * aleph(3, phi), 80.0, "<"),
        LemmaRow("icosa-step1-gap", {"eps0": eps0}, r2 + gamma * eps0, r2 + eta, "<"),
        LemmaRow("icosa-step1-eta", {"eta": eta}, r2 + eta, rinf - eta, "<"),
        LemmaRow("icosa-step1-cap", {"eta": eta}, 2.0 * pi * (1.0 - math.cos(eta)), 0.03, ">"),
        LemmaRow("icosa-step1-triangle", {"eps0": eps0},
                 math.sqrt(3.0) / 4.0 * (2.0 * math.sin(phi - eps0)) ** 2, 0.4, ">"),
        # k <= 12 + (3/pi)(4 pi 80 eps - 0.03 * 50000 eps): the bracket must be negative.
        LemmaRow("icosa-step1-count", {"per_eps": True},
                 3.0 / pi * (4.0 * pi * 80.0 - 0.03 * gamma / 200.0), 0.0, "<"),
        # The printed eta = 0.11 violates r_2 + eta < r_inf - eta (r_inf - r_2 ~ 0.186);
        # eta = 0.09 satisfies it and still closes the count.
        LemmaRow("icosa-step1-eta-repaired", {"eta": ICOSA_ETA_REPAIRED},
                 r2 + ICOSA_ETA_REPAIRED, rinf - ICOSA_ETA_REPAIRED, "<"),
        LemmaRow("icosa-step1-count-repaired", {"per_eps": True, "eta": ICOSA_ETA_REPAIRED},
                 3.0 / pi * (4.0 * pi * 80.0
                             - 2.0 * pi * (1.0 - math.cos(ICOSA_ETA_REPAIRED)) * gamma / 200.0),
                 0.0, "<"),
        LemmaRow("icosa-delta0", {"eps0": 1e-6}, icosa_delta0(1e-6), 3.0 / pi - 0.175, "<"),
        LemmaRow("icosa-step2-angle", {}, 4.0 / math.sin(r2) ** 2, 12.0, "<="),
        LemmaRow("icosa-chain-c", {}, 16.0 * math.sqrt(2.0) / math.sin(phi), 44.0, "<"),
    ]

    # 600-cell, with its own constants throughout.
    phi = PHI_600
    r3, rinf = circumradius_rj(3, phi), circumradius_rinf(phi)
    eps0, eta, gamma = 1e-14, 0.02, 1e12
    rows += [
        LemmaRow("600-aleph", {}, aleph(4, phi), 120.0, "<"),
        LemmaRow("600-aleph-factor", {}, 60.0 / pi**2 * 2.0 * aleph(4, phi), 1500.0, "<"),
        LemmaRow("600-step1-gap", {"eps0": eps0}, r3 + gamma * eps0, r3 + eta, "<"),
        LemmaRow("600-step1-eta", {"eta": eta}, r3 + eta, rinf - 2.0 * eta, "<"),
        LemmaRow("600-step1-cap", {"eta": eta}, 4.0 * pi / 3.0 * math.sin(eta) ** 3, 1e-5, ">"),
        LemmaRow("600-step1-angle", {"eps0": eps0},
                 1.0 - 2.0 * math.sin(phi - eps0) ** 2 / math.sin(r3 + 2.0 * eta) ** 2, -0.1, "<"),
        LemmaRow("600-step1-tetra", {}, math.sqrt(0.1) / 4.0, 0.07, ">"),
        # Native form: k <= 120 + 2 pi^2 1500 eps - 1e-5 (gamma eps / 100 + 1500 eps).
        LemmaRow("600-step1-count", {"per_eps": True},
                 sphere_measure(4) * 1500.0 - 1e-5 * (gamma / 100.0 + 1500.0), 0.0, "<"),
        LemmaRow("600-delta0", {"eps0": 1e-8}, cell600_delta0(1e-8), 60.0 / pi**2 - 0.3, "<"),
        LemmaRow("600-step2-angle", {}, 4.0 / math.sin(r3) ** 2, 30.0, "<="),
        LemmaRow("600-chain-c", {}, 16.0 * math.sqrt(3.0) / math.sin(phi), 90.0, "<"),
    ]
    return rows


# Randomized checks of the elementary inequalities.

@dataclass
class GeometricCheck:
    lemma: str
    n_samples: int
    violations: int
    min_slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return {"lemma": self.lemma, "n": self.n_samples, "violations": self.violations,
                "min_slack": self.min_slack, "pass": self.passed}


def _summary(name: str, slacks) -> GeometricCheck:
    s = np.asarray(slacks, dtype=float)
    return GeometricCheck(name, int(s.size), int((s < -LEMMA_TOL).sum()), float(s.min()))


def _sphere(rng, n, d):
    X = rng.normal(size=(n, d))
    return X / np.linalg.norm(X, axis=1)[:, None]


def _max_pair_inner(U) -> float:
    G = U @ U.T
    iu = np.triu_indices(len(U), 1)
    return float(G[iu].max())


def check_hemisphere_pairs(rng, n: int) -> GeometricCheck:
    """d+1 points in a closed hemisphere have a pair with nonnegative inner product."""
    slacks = []
    for k in range(n):
        d = 2 + k % 5
        v = _sphere(rng, 1, d)[0]
        if k % 2:
            U = _sphere(rng, d + 1, d)
        else:
            # Near-simplex start: the hardest configurations once folded.
            U = simplex_vertices(d) @ _random_rotation(rng, d) + 0.05 * rng.normal(size=(d + 1, d))
            U /= np.linalg.norm(U, axis=1)[:, None]
        s = U @ v
        U = U - 2.0 * np.minimum(s, 0.0)[:, None] * v[None, :]
        slacks.append(_max_pair_inner(U))
    return _summary("hemisphere-pair", slacks)


def check_d_plus_2(rng, n: int) -> GeometricCheck:
    """Any d+2 points of S^{d-1} contain a pair with nonnegative inner product."""
    slacks = []
    for k in range(n):
        d = 2 + k % 5
        if k % 2:
            U = _sphere(rng, d + 2, d)
        else:
            S = simplex_vertices(d) @ _random_rotation(rng, d) + 0.05 * rng.normal(size=(d + 1, d))
            U = np.vstack([S, rng.normal(size=(1, d))])
            U /= np.linalg.norm(U, axis=1)[:, None]
        slacks.append(_max_pair_inner(U))
    return _summary("d+2-pair", slacks)


def _random_rotation(rng, d: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    return Q * np.sign(np.diag(R))


def check_triangle_area(rng, n: int) -> GeometricCheck:
    """A planar triangle containing its circumcenter has area >= sqrt(3)/4 a^2."""
    slacks = []
    while len(slacks) < n:
        ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, 3))
        arcs = np.diff(np.r_[ang, ang[0] + 2.0 * math.pi])
        if arcs.max() > math.pi:
            continue
        R = rng.uniform(0.1, 10.0)
        P = R * np.c_[np.cos(ang), np.sin(ang)]
        a = min(np.linalg.norm(P[i] - P[j]) for i, j in itertools.combinations(range(3), 2))
        E = P[1:] - P[0]
        area = 0.5 * abs(E[0, 0] * E[1, 1] - E[0, 1] * E[1, 0])
        slacks.append(area - math.sqrt(3.0) / 4.0 * a * a)
    return _summary("triangle-area", slacks)


def _angle_config(R: float, omega: float) -> tuple[np.ndarray, np.ndarray]:
    v = np.array([0.0, 0.0, 1.0])
    x = np.array([math.sin(R), 0.0, math.cos(R)])
    y = np.array([math.sin(R) * math.cos(omega), math.sin(R) * math.sin(omega), math.cos(R)])
    return x, y


def check_angle_bound(rng, n: int) -> GeometricCheck:
    """cos(omega) <= 1 - 2 sin^2(psi) / sin^2(R) when delta(x,y) >= 2 psi, psi < R."""
    slacks = []
    while len(slacks) < n:
        R = rng.uniform(0.01, math.pi / 2 - 1e-6)
        omega = rng.uniform(1e-3, math.pi)
        x, y = _angle_config(R, omega)
        dxy = 2.0 * math.atan2(np.linalg.norm(x - y), np.linalg.norm(x + y))
        psi = min(dxy / 2.0, R) * rng.uniform(0.0, 1.0) ** 0.1
        if not 0.0 < psi < R:
            continue
        slacks.append(1.0 - 2.0 * math.sin(psi) ** 2 / math.sin(R) ** 2 - math.cos(omega))
    return _summary("angle-bound", slacks)


def check_angle_bound_perturbed(rng, n: int) -> GeometricCheck:
    """The perturbed form: psi = phi - eps, R <= r + gamma eps."""
    slacks = []
    while len(slacks) < n:
        phi = rng.uniform(0.05, 1.2)
        r = rng.uniform(phi, math.pi / 2)
        gamma = 10.0 ** rng.uniform(0.0, 4.0) + 1e-9
        eps = (math.pi / 2 - r) / gamma * rng.uniform(0.0, 1.0)
        psi = phi - eps
        if not (0.0 < psi < phi < r < math.pi / 2 - gamma * eps and eps > 0):
            continue
        R = rng.uniform(psi, r + gamma * eps)
        if not psi < R < math.pi / 2:
            continue
        cmax = 1.0 - 2.0 * math.sin(psi) ** 2 / math.sin(R) ** 2
        if cmax < -1.0:
            continue
        omega = math.acos(cmax) + (math.pi - math.acos(cmax)) * rng.uniform(0.0, 1.0) ** 3
        bound = (1.0 - 2.0 * math.sin(phi) ** 2 / math.sin(r) ** 2
                 + 4.0 * gamma * eps / math.sin(r) ** 2)
        slacks.append(bound - math.cos(omega))
    return _summary("angle-bound-perturbed", slacks)


def check_tetrahedron_volume(rng, n: int) -> GeometricCheck:
    """Four unit vectors with pairwise <u_i,u_j> <= -theta span volume >= sqrt(theta)/4."""
    base = simplex_vertices(3)
    slacks = []
    while len(slacks) < n:
        U = base @ _random_rotation(rng, 3) + rng.uniform(0.0, 0.4) * rng.normal(size=(4, 3))
        U /= np.linalg.norm(U, axis=1)[:, None]
        theta = -_max_pair_inner(U)
        if not 0.0 < theta < 1.0 / 3.0:
            continue
        E = U[1:] - U[0]
        vol = abs(np.linalg.det(E)) / 6.0
        slacks.append(vol - math.sqrt(theta) / 4.0)
    return _summary("tetrahedron-volume", slacks)


def check_geometric_inequalities(n_samples: int = 1000, seed: int = 0) -> list[GeometricCheck]:
    rng = np.random.default_rng(seed)
    return [
        check_hemisphere_pairs(rng, n_samples),
        check_d_plus_2(rng, n_samples),
        check_triangle_area(rng, n_samples),
        check_angle_bound(rng, n_samples),
        check_angle_bound_perturbed(rng, n_samples),
        check_tetrahedron_volume(rng, n_samples),
    ]
