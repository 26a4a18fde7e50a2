"""Gegenbauer polynomials and the Delsarte linear-programming bound.

Polynomials on S^{d-1} are expanded as ``f = sum_i f_i Q_i`` where ``Q_i`` is
the Gegenbauer polynomial for dimension ``d`` normalized by ``Q_i(1) = 1``.
When ``f_0 > 0``, ``f_i >= 0`` and ``f <= 0`` on ``[-1, s]``, every code with
inner products at most ``s`` has at most ``f(1)/f_0`` points.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Sequence

import numpy as np

from .sphgeo import unit_vectors

NEAR_ANTIPODAL = "NEAR_ANTIPODAL"
NEAR_ORTHOGONAL = "NEAR_ORTHOGONAL"

SIGN_TOL = 1e-12
GRID_POINTS = 10_000


def gegenbauer_eval(d: int, i: int, t) -> np.ndarray | float:
    """Evaluate ``Q_i`` for dimension ``d`` by forward three-term recursion."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if i < 0:
        raise ValueError("degree must be >= 0")
    t = np.asarray(t, dtype=float)
    q_prev = np.ones_like(t)
    if i == 0:
        out = q_prev
    else:
        q = t.copy()
        for k in range(1, i):
            q_prev, q = q, ((2 * k + d - 2) * t * q - k * q_prev) / (k + d - 2)
        out = q
    return float(out) if out.ndim == 0 else out


def _exact(x) -> bool:
    return isinstance(x, (int, Rational)) and not isinstance(x, bool)


@lru_cache(maxsize=None)
def _monomial_table(d: int, k: int) -> tuple[tuple[Fraction, ...], ...]:
    # Row i holds the monomial coefficients of Q_i (ascending powers).
    rows = [[Fraction(1)], [Fraction(0), Fraction(1)]]
    for i in range(1, k):
        a = Fraction(2 * i + d - 2, i + d - 2)
        b = Fraction(i, i + d - 2)
        nxt = [Fraction(0)] * (i + 2)
        for p, c in enumerate(rows[i]):
            nxt[p + 1] += a * c
        for p, c in enumerate(rows[i - 1]):
            nxt[p] -= b * c
        rows.append(nxt)
    return tuple(tuple(r) for r in rows[: k + 1])


@dataclass(frozen=True)
class GegenbauerBasis:
    """``Q_0..Q_k`` for dimension ``d`` in the monomial basis, as exact rationals."""

    dim: int
    max_degree: int
    table: tuple[tuple[Fraction, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        object.__setattr__(self, "table", _monomial_table(self.dim, max(self.max_degree, 1)))

    def monomial(self, i: int) -> tuple[Fraction, ...]:
        return self.table[i]

    def __call__(self, i: int, t):
        return gegenbauer_eval(self.dim, i, t)


def expand_in_gegenbauer(d: int, poly: Sequence) -> list:
    """Gegenbauer coefficients ``f_0..f_k`` of the polynomial ``sum_p poly[p] t^p``.

    Exact (``Fraction``) when every input coefficient is an int or rational;
    floats otherwise.  Solved top-down since ``Q_i`` has degree exactly ``i``.
    """
    coeffs = list(poly)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    k = len(coeffs) - 1
    exact = all(_exact(c) for c in coeffs)
    rem = [Fraction(c) for c in coeffs] if exact else [Fraction(float(c)) for c in coeffs]
    table = GegenbauerBasis(d, k).table
    out = [Fraction(0)] * (k + 1)
    for i in range(k, -1, -1):
        lead = table[i][i]
        out[i] = rem[i] / lead
        for p, c in enumerate(table[i]):
            rem[p] -= out[i] * c
    if exact:
        return out
    return [float(c) for c in out]


def gegenbauer_series(d: int, coeffs: Sequence, t) -> np.ndarray | float:
    """Evaluate ``sum_i coeffs[i] Q_i(t)`` with the recursion run once."""
    t = np.asarray(t, dtype=float)
    q_prev = np.ones_like(t)
    total = float(coeffs[0]) * q_prev
    if len(coeffs) > 1:
        q = t.copy()
        total = total + float(coeffs[1]) * q
        for k in range(1, len(coeffs) - 1):
            q_prev, q = q, ((2 * k + d - 2) * t * q - k * q_prev) / (k + d - 2)
            total = total + float(coeffs[k + 1]) * q
    return float(total) if total.ndim == 0 else total


class CertificateError(ValueError):
    """A certificate failed a sign condition; ``t`` is the offending abscissa
    (``None`` for coefficient-sign failures)."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class LPCertificate:
    """Polynomial ``f = sum f_i Q_i`` in dimension ``dim`` with the interval end ``s``."""

    dim: int
    coeffs: tuple
    s: float | Fraction

    @classmethod
    def from_monomial(cls, d: int, poly: Sequence, s) -> "LPCertificate":
        return cls(d, tuple(expand_in_gegenbauer(d, poly)), s)

    def f(self, t):
        return gegenbauer_series(self.dim, self.coeffs, t)

    @property
    def f_at_one(self):
        # Q_i(1) = 1, so f(1) is the coefficient sum (exact for rationals).
        return sum(self.coeffs)

    def validate(self) -> None:
        """Raise :class:`CertificateError` unless the LP hypotheses hold."""
        f0, rest = self.coeffs[0], self.coeffs[1:]
        if not f0 > 0:
            raise CertificateError(f"f_0 = {f0} is not positive")
        for i, c in enumerate(rest, start=1):
            if c < 0:
                raise CertificateError(f"f_{i} = {c} is negative")
        s = float(self.s)
        if s > 1.0:
            raise CertificateError(f"s = {s} exceeds 1")
        if s < -1.0:
            # Empty sign interval: the code has no pairs (a single point).
            return
        t_bad = find_positive_point(self.f, -1.0, s)
        if t_bad is not None:
            raise CertificateError(
                f"f({t_bad!r}) = {self.f(t_bad)!r} > 0 on [-1, s]", t=t_bad
            )


def find_positive_point(f, a: float, b: float, n: int = GRID_POINTS,
                        tol: float = SIGN_TOL) -> float | None:
    """Return some ``t`` in ``[a, b]`` with ``f(t) > tol``, or ``None``.

    A grid scan is followed by golden-section maximization on every grid
    bracket around a local maximum, so a positive peak narrower than the grid
    spacing is caught when it sits on a sampled local maximum.
    """
    if b <= a:
        return a if f(a) > tol else None
    t = np.linspace(a, b, n)
    y = np.asarray(f(t), dtype=float)
    if (y > tol).any():
        return float(t[int(np.argmax(y))])
    idx = [k for k in range(n) if (k == 0 or y[k] >= y[k - 1]) and (k == n - 1 or y[k] >= y[k + 1])]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for k in idx:
        lo, hi = t[max(k - 1, 0)], t[min(k + 1, n - 1)]
        c, e = hi - g * (hi - lo), lo + g * (hi - lo)
        fc, fe = f(c), f(e)
        while hi - lo > tol:
            if fc > fe:
                hi, e, fe = e, c, fc
                c = hi - g * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, e, fe
                e = lo + g * (hi - lo)
                fe = f(e)
        best = max((fc, c), (fe, e))
        if best[0] > tol:
            return float(best[1])
    return None


def lp_bound(cert: LPCertificate):
    """``f(1)/f_0`` after validating the certificate (exact for rational input)."""
    cert.validate()
    return cert.f_at_one / cert.coeffs[0]


def lemma_certificate(n: int, s) -> LPCertificate:
    """The certificate ``(t+1)(t-s)`` in dimension ``n``."""
    return LPCertificate.from_monomial(n, [-s, 1 - s, 1], s)


@dataclass
class LPSlackReport:
    lhs: float
    rhs: float
    slack: float
    pair_values: np.ndarray = field(repr=False)
    pair_floor: float
    min_pair_value: float
    min_pair_slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9


def lp_inequality_check(X, cert: LPCertificate) -> LPSlackReport:
    """Evaluate both sides of ``|X| f(1) + sum_{x != y} f(<x,y>) >= |X|^2 f_0``.

    The pair floor ``|X|^2 f_0 - |X| f(1)`` bounds each single ``f(<x,y>)``
    from below when all other pairs have ``f <= 0``.
    """
    X = unit_vectors(X)
    k = len(X)
    G = np.clip(X @ X.T, -1.0, 1.0)
    F = np.asarray(cert.f(G), dtype=float)
    off = ~np.eye(k, dtype=bool)
    f1 = float(cert.f_at_one)
    f0 = float(cert.coeffs[0])
    lhs = k * f1 + float(F[off].sum())
    rhs = k * k * f0
    floor = rhs - k * f1
    pv = F[off]
    mn = float(pv.min()) if pv.size else math.inf
    return LPSlackReport(lhs, rhs, lhs - rhs, F, floor, mn, mn - floor)


@dataclass
class PairClassification:
    labels: dict
    opposite: list
    eta: float
    s: float

    def pairs(self, label: str) -> list:
        return sorted(p for p, lab in self.labels.items() if lab == label)


class StructuralViolation(ValueError):
    """A pair lies in neither band of the crosspolytope dichotomy."""


def crosspolytope_eta(d: int, eps: float) -> float:
    return 8.0 * d * (d - 1) * math.sin(2.0 * eps)


def classify_crosspolytope_pairs(X, eps: float) -> PairClassification:
    """Label every pair as near-antipodal (``<x,y> <= -3/4``) or near-orthogonal
    (``|<x,y>| <= eta``) and check the near-antipodal pairs form a perfect matching."""
    X = unit_vectors(X)
    k, d = X.shape
    if k != 2 * d:
        raise ValueError(f"expected 2d = {2 * d} points, got {k}")
    eta = crosspolytope_eta(d, eps)
    G = X @ X.T
    labels = {}
    opposite = [-1] * k
    for i in range(k):
        for j in range(i + 1, k):
            g = float(G[i, j])
            if g <= -0.75:
                labels[(i, j)] = NEAR_ANTIPODAL
                if opposite[i] != -1 or opposite[j] != -1:
                    raise StructuralViolation(f"point {i} or {j} has two near-antipodal partners")
                opposite[i], opposite[j] = j, i
            elif abs(g) <= eta + SIGN_TOL:
                labels[(i, j)] = NEAR_ORTHOGONAL
            else:
                raise StructuralViolation(
                    f"<x_{i}, x_{j}> = {g:.6g} is neither <= -3/4 nor within eta = {eta:.3g} of 0"
                )
    if -1 in opposite:
        raise StructuralViolation(f"point {opposite.index(-1)} has no near-antipodal partner")
    return PairClassification(labels, opposite, eta, math.sin(2.0 * eps))


def parse_polynomial(expr: str, s=0.0) -> list:
    """Monomial coefficients of an arithmetic expression in ``t`` (and ``s``).

    Supports ``+ - *``, integer powers and numeric literals.  Coefficients are
    rational when ``s`` and every literal are.
    """
    tree = ast.parse(expr.replace("^", "**"), mode="eval")

    def ev(node):
        # Polynomials are lists of coefficients, ascending.
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = node.value
            return [Fraction(v) if isinstance(v, int) else v]
        if isinstance(node, ast.Name):
            if node.id == "t":
                return [0, 1]
            if node.id == "s":
                return [s]
            raise ValueError(f"unknown symbol {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            p = ev(node.operand)
            return [-c for c in p] if isinstance(node.op, ast.USub) else p
        if isinstance(node, ast.BinOp):
            a = ev(node.left)
            if isinstance(node.op, ast.Pow):
                e = node.right
                if not (isinstance(e, ast.Constant) and isinstance(e.value, int) and e.value >= 0):
                    raise ValueError("only non-negative integer powers are supported")
                out = [1]
                for _ in range(e.value):
                    out = _pmul(out, a)
                return out
            b = ev(node.right)
            if isinstance(node.op, ast.Add):
                return _padd(a, b)
            if isinstance(node.op, ast.Sub):
                return _padd(a, [-c for c in b])
            if isinstance(node.op, ast.Mult):
                return _pmul(a, b)
        raise ValueError(f"unsupported expression element: {ast.dump(node)}")

    return ev(tree)


def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def _pmul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out
