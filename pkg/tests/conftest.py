import numpy as np
import pytest

from sphstab.cells import delone_complex
from sphstab.polytopes import generate


@pytest.fixture(scope="session")
def icosahedron():
    return generate("icosahedron")


@pytest.fixture(scope="session")
def cell600():
    return generate("cell600")


@pytest.fixture(scope="session")
def icosa_complex(icosahedron):
    return delone_complex(icosahedron.vertices)


@pytest.fixture(scope="session")
def cell600_complex(cell600):
    return delone_complex(cell600.vertices)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_rotation(rng, d, proper=False):
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    Q = Q * np.sign(np.diag(R))
    if proper and np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def tangent_perturb(rng, V, eps):
    """Move every row of V by exactly eps along a random tangent direction."""
    G = rng.normal(size=V.shape)
    G -= np.sum(G * V, axis=1)[:, None] * V
    G /= np.linalg.norm(G, axis=1)[:, None]
    return np.cos(eps) * V + np.sin(eps) * G


def almost_orthogonal_inputs(rng, n, count):
    """Random u_1..u_n in S^{n-1} with max |<u_i,u_j>| < 1/(n-1), and eta = that max."""
    out = []
    while len(out) < count:
        scale = 10.0 ** rng.uniform(-6, -0.5)
        U = random_rotation(rng, n) + scale * rng.normal(size=(n, n))
        U /= np.linalg.norm(U, axis=1)[:, None]
        G = U @ U.T
        eta = float(np.abs(G[~np.eye(n, dtype=bool)]).max())
        if eta < 1.0 / (n - 1) - 1e-9:
            out.append((U, eta))
    return out


def lemma21_violations(U, V, eta):
    """Count failed postconditions of the almost-orthogonal basis construction."""
    n = len(U)
    bad = 0
    if np.abs(V @ V.T - np.eye(n)).max() > 1e-12:
        bad += 1
    for i in range(n):
        Q = V[i:].T
        if np.linalg.norm(U[i:] - (U[i:] @ Q) @ Q.T) > 1e-10:
            bad += 1
        if not U[i] @ V[i] > 0:
            bad += 1
    bound = eta / (1.0 - (n - 2) * eta)
    M = np.abs(U @ V.T)
    if M[~np.eye(n, dtype=bool)].max() > bound + 1e-12:
        bad += 1
    if eta < 1.0 / (2 * n):
        ang = 2 * np.arctan2(np.linalg.norm(U - V, axis=1), np.linalg.norm(U + V, axis=1))
        if ang.max() > 2 * n * eta + 1e-12:
            bad += 1
    return bad


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
