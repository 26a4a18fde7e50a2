import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphstab.densities import (
    build_orthoscheme,
    check_delta_monotone,
    delta,
    delta_cap_ratio,
    delta_solid_angle,
    orthoscheme_volume_quadrature,
    regular_params,
    simplex_bound,
)
from sphstab.polytopes import PHI_600, PHI_ICOSAHEDRON
from sphstab.sphgeo import circumradius_rj, vertex_angles

T_ICOSA = regular_params(3, PHI_ICOSAHEDRON)
T_600 = regular_params(4, PHI_600)


def test_regular_params_start_at_sigma():
    assert T_ICOSA[0] == PHI_ICOSAHEDRON
    assert T_ICOSA[1] == circumradius_rj(2, PHI_ICOSAHEDRON)


def test_icosa_orthoscheme_volume_and_delta():
    theta = build_orthoscheme(T_ICOSA)
    assert theta.volume() == pytest.approx(math.pi / 30, abs=1e-12)
    assert delta(T_ICOSA) == pytest.approx(3 / math.pi, abs=1e-12)
    assert 120 * theta.volume() == pytest.approx(4 * math.pi, abs=1e-9)


def test_icosa_right_angle_at_z1():
    angles = vertex_angles(build_orthoscheme(T_ICOSA).vertices)
    assert angles[1] == pytest.approx(math.pi / 2, abs=1e-12)


def test_600_orthoscheme_volume_and_delta():
    theta = build_orthoscheme(T_600)
    assert theta.volume() == pytest.approx(math.pi**2 / 7200, rel=1e-10)
    assert delta(T_600) == pytest.approx(60 / math.pi**2, rel=1e-10)
    assert 14400 * theta.volume() == pytest.approx(2 * math.pi**2, rel=1e-5)


def test_volume_routes_agree():
    assert orthoscheme_volume_quadrature(T_600, rtol=1e-10) == pytest.approx(
        build_orthoscheme(T_600).volume(), rel=1e-9)


def test_orthogonality_chain():
    for t in (T_ICOSA, T_600, (0.1, 0.2, 0.3, 0.4)):
        assert build_orthoscheme(t).orthogonality_error() <= 1e-14


def test_orthoscheme_distances():
    theta = build_orthoscheme(T_600)
    Z = theta.vertices
    for i, t in enumerate(T_600, start=1):
        assert math.acos(Z[0] @ Z[i]) == pytest.approx(t, abs=1e-12)


@pytest.mark.parametrize("bad", [(0.3, 0.3), (0.4, 0.3), (0.0, 0.2), (0.2, math.pi / 2)])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        build_orthoscheme(bad)


@pytest.mark.parametrize("t", [T_ICOSA, T_600, (0.2, 0.5), (0.1, 0.3, 0.7)])
def test_probe_independence(t):
    a = delta_cap_ratio(t, probe=t[0] / 2)
    b = delta_cap_ratio(t, probe=t[0] / 4)
    assert a == pytest.approx(b, rel=1e-8)


def test_simplex_bounds():
    assert simplex_bound(3, PHI_ICOSAHEDRON) == pytest.approx(12, abs=1e-7)
    assert simplex_bound(4, math.pi / 10) == pytest.approx(120, rel=1e-5)
    assert simplex_bound(3, PHI_ICOSAHEDRON + 1e-3) < 12


@pytest.mark.parametrize("d,kind_phi,f0", [(3, 0.5 * math.acos(-1 / 3), 4), (3, math.pi / 4, 6),
                                            (4, 0.5 * math.acos(-1 / 4), 5), (4, math.pi / 4, 8)])
def test_simplex_bound_tight_for_regular_polytopes(d, kind_phi, f0):
    assert simplex_bound(d, kind_phi) == pytest.approx(f0, rel=1e-9)


def test_monotone_examples():
    assert check_delta_monotone(T_ICOSA, T_ICOSA)
    assert check_delta_monotone(T_ICOSA, tuple(x + 0.01 for x in T_ICOSA))


def test_monotone_random(rng):
    n = 0
    while n < 100:
        d = 3 + n % 2
        t = np.sort(rng.uniform(0.05, 1.2, d - 1))
        s = t + rng.uniform(0, 0.2, d - 1)
        if np.any(np.diff(t) <= 1e-3) or np.any(np.diff(s) <= 1e-3) or s[-1] >= 1.5:
            continue
        assert check_delta_monotone(t, s)
        n += 1


def test_monotone_rejects_unordered():
    with pytest.raises(ValueError):
        check_delta_monotone((0.3, 0.5), (0.2, 0.6))


def test_delta_forms_agree_grid():
    for a in np.linspace(0.1, 0.6, 6):
        for b in np.linspace(a + 0.05, 1.2, 5):
            t = (a, b)
            assert delta_cap_ratio(t) == pytest.approx(delta_solid_angle(t), rel=1e-7)
            for c in np.linspace(b + 0.05, 1.4, 3):
                t = (a, b, c)
                assert delta_cap_ratio(t) == pytest.approx(delta_solid_angle(t), rel=1e-7)


params2 = st.lists(st.floats(0.02, 1.5), min_size=2, max_size=3, unique=True).map(sorted).filter(
    lambda t: all(b - a > 1e-2 for a, b in zip(t, t[1:])))


@settings(max_examples=40, deadline=None)
@given(params2)
def test_delta_positive_and_consistent(t):
    v = delta(t)
    assert v > 0
    theta = build_orthoscheme(t)
    # Small caps about z_0 are a fraction of Theta.
    assert v * theta.volume() <= 1.0 + 1e-12
