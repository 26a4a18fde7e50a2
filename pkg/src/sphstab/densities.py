"""Orthoschemes on S^{d-1}, the apex density Delta, and the simplex bound.

An orthoscheme Theta(t_1, ..., t_{d-1}) has vertices z_0, ..., z_{d-1} with
delta(z_0, z_i) = t_i, and the great sphere through z_0..z_i is orthogonal to
the one through z_i..z_{d-1} for every i.  Delta is the density, per unit cap
measure, of a small cap about z_0 inside the orthoscheme:

    Delta = H^{d-2}(Psi & S^{d-1}) / (|Theta| * H^{d-2}(S^{d-2}))

where Psi is the tangent cone of Theta at z_0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .quadrature import integrate_simplex
from .sphgeo import (
    _tangent_basis,
    cap_volume,
    circumradius_rj,
    geodesic_distance,
    sphere_measure,
    spherical_simplex_volume,
    spherical_triangle_area,
)

ORTHO_TOL = 1e-10
AGREE_TOL = 1e-7
VOLUME_RTOL = 1e-12


@dataclass(frozen=True)
class Orthoscheme:
    """Canonical realization of Theta(t_1, ..., t_{d-1}) in R^d."""

    params: tuple[float, ...]
    vertices: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def diameter(self) -> float:
        return self.params[-1]

    def orthogonality_error(self) -> float:
        """Largest |<a, b>| between the parts of the two great-sphere chains
        orthogonal to their common point z_i."""
        Z = self.vertices
        worst = 0.0
        for i in range(1, self.dim - 1):
            zi = Z[i]
            A = Z[:i] - np.outer(Z[:i] @ zi, zi)
            B = Z[i + 1:] - np.outer(Z[i + 1:] @ zi, zi)
            worst = max(worst, float(np.abs(A @ B.T).max()))
        return worst

    def tangent_directions(self) -> np.ndarray:
        """Unit tangent vectors at z_0 of the arcs z_0 z_i, i >= 1, in z_0^perp coordinates."""
        z0 = self.vertices[0]
        T = self.vertices[1:] - np.outer(self.vertices[1:] @ z0, z0)
        T /= np.linalg.norm(T, axis=1)[:, None]
        return T @ _tangent_basis(z0)

    def solid_angle(self) -> float:
        """H^{d-2} of the tangent cone at z_0 intersected with the unit sphere."""
        U = self.tangent_directions()
        if self.dim == 2:
            return 1.0
        if self.dim == 3:
            return geodesic_distance(U[0], U[1])
        if self.dim == 4:
            return spherical_triangle_area(U)
        raise ValueError("solid angle implemented for d in {2, 3, 4}")

    def base_projection(self) -> tuple[np.ndarray, float]:
        """Radial projection of the facet opposite z_0 to the tangent plane at z_0.

        Returns the projected vertices (in z_0^perp coordinates) and the
        distance ``h`` from z_0 to their hyperplane, which is ``tan t_1``.
        """
        z0 = self.vertices[0]
        F = self.vertices[1:]
        P = (F / (F @ z0)[:, None]) @ _tangent_basis(z0)
        return P, math.tan(self.params[0])

    def volume(self, rtol: float = VOLUME_RTOL) -> float:
        """|Theta|: Girard for d=3, cone-over-base cubature for d >= 4.

        In the tangent plane at z_0 the spherical measure has density
        (1+|y|^2)^{-d/2}.  Integrating radially in closed form leaves a smooth
        integrand over the projected base facet.
        """
        d = self.dim
        if d == 2:
            return self.params[0]
        if d == 3:
            return spherical_triangle_area(self.vertices)
        P, h = self.base_projection()
        frame, coords = _facet_frame(P)
        radial = _radial_primitive(d)

        def f(x):
            p = P[0] + x @ frame
            r = np.linalg.norm(p, axis=1)
            return radial(np.arctan(r)) * h / r ** (d - 1)

        return integrate_simplex(f, coords, order=10, rtol=rtol).value


def _facet_frame(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal frame of the affine hull of the rows of ``P`` and the
    vertex coordinates in it (first vertex at the origin)."""
    E = P[1:] - P[0]
    Q, _ = np.linalg.qr(E.T)
    frame = Q.T
    coords = np.vstack([np.zeros(len(E)), E @ frame.T])
    return frame, coords


def _radial_primitive(d: int):
    """theta -> int_0^theta sin^{d-2}, vectorized, closed form for d <= 5."""
    if d == 3:
        return lambda th: 1.0 - np.cos(th)
    if d == 4:
        return lambda th: 0.5 * (th - np.sin(th) * np.cos(th))
    if d == 5:
        return lambda th: 2.0 / 3.0 - np.cos(th) + np.cos(th) ** 3 / 3.0
    raise ValueError("radial primitive implemented for d in {3, 4, 5}")


def _check_params(t) -> tuple[float, ...]:
    t = tuple(float(x) for x in np.atleast_1d(t))
    if not t:
        raise ValueError("need at least one orthoscheme parameter")
    if not all(0.0 < x < math.pi / 2 for x in t):
        raise ValueError(f"orthoscheme parameters must lie in (0, pi/2), got {t}")
    if any(b <= a for a, b in zip(t, t[1:])):
        raise ValueError(f"orthoscheme parameters must be strictly increasing, got {t}")
    return t


def build_orthoscheme(t) -> Orthoscheme:
    """Realize Theta(t) with z_0 = e_1 and z_{i+1} in lin{z_i, e_{i+2}}."""
    t = _check_params(t)
    d = len(t) + 1
    Z = np.zeros((d, d))
    Z[0, 0] = 1.0
    cos_prev = 1.0
    for i, ti in enumerate(t):
        ratio = math.cos(ti) / cos_prev
        Z[i + 1] = ratio * Z[i]
        Z[i + 1, i + 1] = math.sqrt(max(0.0, 1.0 - ratio * ratio))
        cos_prev = math.cos(ti)
    Z.setflags(write=False)
    theta = Orthoscheme(t, Z)
    err = theta.orthogonality_error()
    if err > ORTHO_TOL:
        raise ArithmeticError(f"orthogonality chain violated by {err:.3e}")
    return theta


def _solid_angle_by_base(theta: Orthoscheme, rtol: float) -> float:
    """Solid angle at z_0 as h * int_{F'} |p|^{-(d-1)} dA over the projected base."""
    d = theta.dim
    P, h = theta.base_projection()
    if d == 3:
        a, b = P
        L = float(np.linalg.norm(b - a))
        val, _ = integrate.quad(
            lambda s: h / float(np.sum((a + s * (b - a)) ** 2)), 0.0, 1.0,
            epsabs=0, epsrel=1e-13,
        )
        return val * L
    frame, coords = _facet_frame(P)

    def f(x):
        p = P[0] + x @ frame
        return h / np.linalg.norm(p, axis=1) ** (d - 1)

    return integrate_simplex(f, coords, order=10, rtol=rtol).value


def delta_cap_ratio(t, probe: float | None = None, rtol: float = VOLUME_RTOL) -> float:
    """Delta as |Theta & B(z_0, probe)| / (|Theta| |B(z_0, probe)|), default probe t_1/2.

    For probe <= t_1 the cap meets Theta in a cone sector; its measure is
    computed from the base-facet solid angle and a radial quadrature.
    """
    theta = t if isinstance(t, Orthoscheme) else build_orthoscheme(t)
    phi = theta.params[0] / 2.0 if probe is None else float(probe)
    if not 0.0 < phi <= theta.params[0]:
        raise ValueError("probe radius must lie in (0, t_1]")
    d = theta.dim
    omega = _solid_angle_by_base(theta, rtol)
    radial, _ = integrate.quad(
        lambda r: r ** (d - 2) * (1.0 + r * r) ** (-d / 2.0), 0.0, math.tan(phi),
        epsabs=0, epsrel=1e-13,
    )
    return omega * radial / (theta.volume(rtol) * cap_volume(d, phi))


def delta_solid_angle(t, rtol: float = VOLUME_RTOL) -> float:
    theta = t if isinstance(t, Orthoscheme) else build_orthoscheme(t)
    return theta.solid_angle() / (theta.volume(rtol) * sphere_measure(theta.dim - 1))


def delta(t, rtol: float = VOLUME_RTOL, check: bool = True) -> float:
    """Delta(t_1, ..., t_{d-1}), cross-checked against the cap-ratio form."""
    theta = t if isinstance(t, Orthoscheme) else build_orthoscheme(t)
    val = delta_solid_angle(theta, rtol)
    if check:
        alt = delta_cap_ratio(theta, rtol=rtol)
        if abs(alt - val) > AGREE_TOL * abs(val):
            raise ArithmeticError(f"Delta forms disagree: {val!r} vs {alt!r}")
    return val


def regular_params(d: int, sigma: float) -> tuple[float, ...]:
    """(r_1(sigma), ..., r_{d-1}(sigma)); note r_1(sigma) = sigma."""
    return tuple(circumradius_rj(j, sigma) for j in range(1, d))


def simplex_bound(d: int, sigma: float, rtol: float = VOLUME_RTOL) -> float:
    """Delta(r_1(sigma), ..., r_{d-1}(sigma)) * |S^{d-1}|."""
    if not 0.0 < sigma < math.pi / 2:
        raise ValueError("sigma must lie in (0, pi/2)")
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return delta(regular_params(d, sigma), rtol) * sphere_measure(d)


def check_delta_monotone(t, s, tol: float = 1e-9) -> bool:
    """Delta is non-increasing when every parameter grows."""
    t = _check_params(t)
    s = _check_params(s)
    if len(t) != len(s):
        raise ValueError("parameter vectors must have equal length")
    if any(a > b for a, b in zip(t, s)):
        raise ValueError("need t_i <= s_i componentwise")
    return delta(t) >= delta(s) - tol


def orthoscheme_volume_quadrature(t, rtol: float = 1e-9) -> float:
    """|Theta| by generic tangent-plane cubature of the full simplex (cross-check)."""
    theta = build_orthoscheme(t)
    return spherical_simplex_volume(theta.vertices, method="quadrature", rtol=rtol)
