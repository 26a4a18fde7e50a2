import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphstab.cells import HypothesisError
from sphstab.lpbound import StructuralViolation
from sphstab.polytopes import crosspolytope_vertices, generate, simplex_vertices
from sphstab.recovery import (
    Rotation,
    _plane_rotation,
    almost_orthogonal_basis,
    almost_orthogonal_bound,
    procrustes_align,
    recover,
    recover_crosspolytope,
    recover_global,
    recover_simplex,
    reflect_vertex,
)
from sphstab.sphgeo import geodesic_distance

from conftest import (
    almost_orthogonal_inputs,
    lemma21_violations,
    random_rotation,
    tangent_perturb,
)


# Almost orthogonal bases.

def test_orthonormal_fixed_point(rng):
    U = random_rotation(rng, 4)
    V = almost_orthogonal_basis(U, 0.0)
    assert np.abs(V - U).max() <= 1e-15


def test_n2_closed_form():
    a = 0.01
    U = np.array([[1.0, 0.0], [math.sin(a), math.cos(a)]])
    eta = math.sin(a)
    V = almost_orthogonal_basis(U, eta)
    dev = geodesic_distance(U, V)
    # v_n = u_n, so the whole correction is on u_1.
    assert np.array_equal(V[1], U[1])
    assert dev[0] == pytest.approx(a, abs=1e-14)
    assert dev.max() <= 4 * eta
    assert (np.sum(U * V, axis=1) > 0).all()


def test_n3_perturbed(rng):
    U = tangent_perturb(rng, np.eye(3), 1e-4)
    G = U @ U.T
    eta = float(np.abs(G[~np.eye(3, dtype=bool)]).max())
    V = almost_orthogonal_basis(U, eta)
    assert geodesic_distance(U, V).max() <= 2 * 3 * eta


@pytest.mark.parametrize("n", range(2, 7))
def test_postconditions_random(n):
    rng = np.random.default_rng(100 + n)
    bad = 0
    for U, eta in almost_orthogonal_inputs(rng, n, 1000):
        bad += lemma21_violations(U, almost_orthogonal_basis(U, eta), eta)
    assert bad == 0


def test_eta_range_errors():
    with pytest.raises(ValueError):
        almost_orthogonal_basis(np.eye(3), 0.5)
    U = np.array([[1.0, 0.0], [0.6, 0.8]])
    with pytest.raises(ValueError):
        almost_orthogonal_basis(U, 0.1)
    assert almost_orthogonal_bound(4, 0.1) == pytest.approx(0.1 / 0.8)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_plane_rotation_properties(m, seed):
    rng = np.random.default_rng(seed)
    e = np.zeros(m)
    e[-1] = 1.0
    q = e + 10.0 ** rng.uniform(-12, 0) * rng.normal(size=m)
    q /= np.linalg.norm(q)
    if q @ e <= 0:
        return
    A = _plane_rotation(q, e)
    assert np.abs(A @ A.T - np.eye(m)).max() <= 1e-14
    assert np.linalg.det(A) == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(A @ q - e) <= 1e-14
    u = rng.normal(size=m)
    u /= np.linalg.norm(u)
    assert np.linalg.norm(A @ u - u) <= np.linalg.norm(e - q) + 1e-14
    p = q - (q @ e) * e
    if np.linalg.norm(p) > 1e-8:
        p /= np.linalg.norm(p)
        w = rng.normal(size=m)
        w -= (w @ e) * e + (w @ p) * p
        # Vectors orthogonal to lin{e, q} are fixed.
        assert np.linalg.norm(A @ w - w) <= 1e-12


# Simplices.

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_simplex_exact(d, rng):
    U = simplex_vertices(d) @ random_rotation(rng, d)
    res = recover_simplex(U, 0.0)
    assert res.max_deviation <= 1e-10 and res.passed


def test_simplex_d3_bound(rng):
    eps = 1e-5
    U = tangent_perturb(rng, simplex_vertices(3), eps)
    res = recover_simplex(U, eps)
    assert res.max_deviation <= 9 * 3**3.5 * eps
    assert res.bound == pytest.approx(4.2089e-3, rel=1e-4)


def test_triangle_path():
    eps = 1e-4
    ang = np.array([0.0, 2 * math.pi / 3 - 2 * eps, 4 * math.pi / 3 - eps])
    U = np.c_[np.cos(ang), np.sin(ang)]
    res = recover_simplex(U, eps)
    assert res.max_deviation <= 3 * eps
    assert res.diagnostics["minimax_deviation"] <= res.max_deviation + 1e-15


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_simplex_output_regular(d, rng):
    eps = 1e-6
    res = recover_simplex(tangent_perturb(rng, simplex_vertices(d) @ random_rotation(rng, d), eps), eps)
    V = res.matched_vertices
    G = V @ V.T
    assert np.abs(G[~np.eye(d + 1, dtype=bool)] + 1 / d).max() <= 1e-12


@pytest.mark.parametrize("d", [3, 4, 5])
def test_simplex_equivariance(d):
    rng = np.random.default_rng(d)
    eps = 1e-6
    U = tangent_perturb(rng, simplex_vertices(d) @ random_rotation(rng, d), eps)
    a = np.sort(recover_simplex(U, eps).deviations)
    for _ in range(5):
        b = np.sort(recover_simplex(U @ random_rotation(rng, d).T, eps).deviations)
        assert np.abs(a - b).max() <= 1e-10


@pytest.mark.parametrize("d", [3, 4, 5])
def test_simplex_monotone_in_eps(d):
    rng = np.random.default_rng(40 + d)
    V = simplex_vertices(d)
    G = rng.normal(size=V.shape)
    G -= np.sum(G * V, axis=1)[:, None] * V
    G /= np.linalg.norm(G, axis=1)[:, None]
    devs = []
    for eps in (1e-8, 1e-7, 1e-6, 1e-5):
        X = np.cos(eps) * V + np.sin(eps) * G
        devs.append(recover_simplex(X, eps).max_deviation)
    assert all(a <= b + 1e-10 for a, b in zip(devs, devs[1:]))


def test_simplex_hypothesis_violation():
    U = simplex_vertices(3).copy()
    U[1] = U[0] + 0.3 * U[1]
    U[1] /= np.linalg.norm(U[1])
    with pytest.raises(HypothesisError):
        recover_simplex(U, 1e-6)
    with pytest.raises(ValueError):
        recover_simplex(simplex_vertices(3), 1.0)


# Crosspolytopes.

@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_cross_exact_signed_permutation(d):
    res = recover_crosspolytope(crosspolytope_vertices(d), 0.0)
    assert res.max_deviation <= 1e-10
    M = res.rotation.matrix
    assert np.abs(np.abs(M).round() - np.abs(M)).max() <= 1e-12
    assert (np.abs(M).round().sum(axis=0) == 1).all()


def test_cross_d3_bound(rng):
    eps = 1e-6
    X = tangent_perturb(rng, crosspolytope_vertices(3) @ random_rotation(rng, 3), eps)
    res = recover_crosspolytope(X, eps)
    assert res.max_deviation <= 2.592e-3
    dg = res.diagnostics
    assert dg["max_representative_deviation"] <= dg["representative_bound"]
    assert res.max_deviation <= dg["opposite_bound"]


def test_cross_structural_violation():
    X = crosspolytope_vertices(3).copy()
    X[1] = [-0.5, math.sqrt(3) / 2, 0.0]
    with pytest.raises((StructuralViolation, HypothesisError)):
        recover_crosspolytope(X, 1e-6)


def test_cross_too_many_points(rng):
    X = np.vstack([crosspolytope_vertices(3), [[1 / math.sqrt(3)] * 3]])
    with pytest.raises(HypothesisError):
        recover_crosspolytope(X, 1e-6)


# Reflection across facets.

def test_reflect_equatorial_edge():
    out = reflect_vertex([[1.0, 0, 0], [0, 1.0, 0]], [0, 0, 1.0])
    assert geodesic_distance(out, [0, 0, -1.0]) <= 1e-10


def test_reflect_icosahedron(icosahedron, icosa_complex):
    X = icosahedron.vertices
    adj = icosa_complex.adjacency
    for f, cell in enumerate(icosa_complex.cells):
        for g in adj[f]:
            other = icosa_complex.cells[g]
            shared = [i for i in cell if i in other]
            apex = [i for i in cell if i not in other][0]
            new = [i for i in other if i not in cell][0]
            assert np.linalg.norm(reflect_vertex(X[shared], X[apex]) - X[new]) <= 1e-9


def test_reflect_600cell(cell600, cell600_complex):
    X = cell600.vertices
    cx = cell600_complex
    for f in range(0, 600, 37):
        cell = cx.cells[f]
        g = cx.adjacency[f][0]
        shared = [i for i in cell if i in cx.cells[g]]
        apex = [i for i in cell if i not in cx.cells[g]][0]
        v = reflect_vertex(X[shared], X[apex])
        assert np.linalg.norm(X - v, axis=1).min() <= 1e-9


def test_reflect_requires_regular():
    with pytest.raises(ValueError):
        reflect_vertex([[1.0, 0, 0], [0, 1.0, 0]], [0.6, 0, 0.8])


# Global recovery.

def _is_symmetry(M, V):
    W = V @ M.T
    return all(np.linalg.norm(V - w, axis=1).min() <= 1e-9 for w in W)


def test_global_exact_icosahedron(icosahedron, rng):
    X = (icosahedron.vertices @ random_rotation(rng, 3).T)[rng.permutation(12)]
    res = recover_global(X, "icosahedron", 0.0)
    assert res.max_deviation <= 1e-9
    ident = recover_global(icosahedron.vertices, "icosahedron", 0.0)
    assert _is_symmetry(ident.rotation.matrix, icosahedron.vertices)


def test_global_perturbed_icosahedron(icosahedron):
    rng = np.random.default_rng(8)
    eps = 1e-7
    X = tangent_perturb(rng, icosahedron.vertices @ random_rotation(rng, 3).T, eps)
    res = recover(X, "icosahedron", eps=eps)
    dg = res.diagnostics
    assert dg["k"] == 12 and sorted(res.matching.tolist()) == list(range(12))
    assert dg["max_circumradius"] <= dg["step1_bound"]
    assert math.isfinite(dg["empirical_ratio"]) and dg["empirical_ratio"] < 100
    assert res.passed and dg["paper_constant_tight"] is False
    oracle = procrustes_align(X, icosahedron.vertices)
    assert 0.5 <= res.max_deviation / oracle.max_deviation <= 2.0


def test_global_exact_600(cell600, rng):
    X = (cell600.vertices @ random_rotation(rng, 4).T)[rng.permutation(120)]
    res = recover_global(X, "cell600", 0.0)
    assert res.max_deviation <= 1e-9


def test_global_perturbed_600(cell600):
    rng = np.random.default_rng(9)
    eps = 1e-9
    X = tangent_perturb(rng, cell600.vertices, eps)
    res = recover_global(X, "cell600", eps)
    assert res.diagnostics["k"] == 120
    assert res.passed and res.max_deviation <= 100 * eps


def test_global_wrong_count(icosahedron):
    with pytest.raises(HypothesisError):
        recover_global(icosahedron.vertices[:11], "icosahedron", 1e-7)


def test_global_step1_violation(icosahedron):
    X = icosahedron.vertices.copy()
    X[0] = tangent_perturb(np.random.default_rng(0), X[:1], 0.05)[0]
    with pytest.raises(HypothesisError):
        recover_global(X, "icosahedron", 1e-9)


# Procrustes oracle.

def test_procrustes_known_rotation(icosahedron, rng):
    R = random_rotation(rng, 3)
    res = procrustes_align(icosahedron.vertices @ R.T, icosahedron.vertices)
    assert np.abs(res.rotation.matrix - R).max() <= 1e-10 or _is_symmetry(
        res.rotation.matrix.T @ R, icosahedron.vertices)
    assert res.max_deviation <= 1e-10


def test_procrustes_identity_matching(rng):
    V = simplex_vertices(4)
    R = random_rotation(rng, 4)
    res = procrustes_align(V @ R.T, V, matching=np.arange(5))
    assert np.abs(res.rotation.matrix - R).max() <= 1e-10
    assert np.array_equal(res.matching, np.arange(5))


def test_procrustes_mirror_allowed():
    V = simplex_vertices(3)
    M = np.diag([-1.0, 1.0, 1.0])
    res = procrustes_align(V @ M, V, matching=np.arange(4))
    assert res.rotation.det == pytest.approx(-1.0)
    assert res.max_deviation <= 1e-12


def test_rotation_validates():
    with pytest.raises(ValueError):
        Rotation(np.array([[1.0, 0.1], [0.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 5), st.integers(0, 2**32 - 1), st.sampled_from([1e-8, 1e-7, 1e-6]))
def test_simplex_certifies_random(d, seed, eps):
    rng = np.random.default_rng(seed)
    V = simplex_vertices(d) @ random_rotation(rng, d)
    X = tangent_perturb(rng, V, eps)[rng.permutation(d + 1)]
    res = recover_simplex(X, eps)
    assert res.passed and res.max_deviation <= 3 * eps


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1), st.sampled_from([1e-8, 1e-7, 1e-6]))
def test_cross_certifies_random(d, seed, eps):
    rng = np.random.default_rng(seed)
    V = crosspolytope_vertices(d) @ random_rotation(rng, d)
    X = tangent_perturb(rng, V, eps)[rng.permutation(2 * d)]
    res = recover_crosspolytope(X, eps)
    assert res.passed and res.max_deviation <= 3 * eps
