import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphstab.lpbound import (
    NEAR_ANTIPODAL,
    NEAR_ORTHOGONAL,
    CertificateError,
    LPCertificate,
    StructuralViolation,
    classify_crosspolytope_pairs,
    crosspolytope_eta,
    expand_in_gegenbauer,
    find_positive_point,
    gegenbauer_eval,
    gegenbauer_series,
    lemma_certificate,
    lp_bound,
    lp_inequality_check,
    parse_polynomial,
)
from sphstab.polytopes import crosspolytope_vertices

from conftest import random_rotation, tangent_perturb


@pytest.mark.parametrize("d", range(2, 9))
def test_q_normalization(d):
    for i in range(6):
        assert gegenbauer_eval(d, i, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert gegenbauer_eval(d, 1, 0.0) == 0.0


def test_q2_explicit():
    assert gegenbauer_eval(3, 2, 0.5) == pytest.approx(-0.125, abs=1e-15)
    t = np.linspace(-1, 1, 201)
    for d in range(2, 9):
        assert np.abs(gegenbauer_eval(d, 2, t) - (d * t * t - 1) / (d - 1)).max() <= 1e-14


@pytest.mark.parametrize("d", range(2, 9))
def test_expansions(d):
    assert expand_in_gegenbauer(d, parse_polynomial("t*(t+1)")) == [Fraction(1, d), 1, 1 - Fraction(1, d)]
    s = Fraction(1, 7)
    assert expand_in_gegenbauer(d, parse_polynomial("(t+1)*(t-s)", s)) == [
        Fraction(1, d) - s, 1 - s, 1 - Fraction(1, d)]
    assert expand_in_gegenbauer(d, [1]) == [1]


@pytest.mark.parametrize("d", range(2, 9))
def test_lp_bound_2d_exact(d):
    v = lp_bound(LPCertificate.from_monomial(d, parse_polynomial("t*(t+1)"), 0))
    assert v == 2 * d and isinstance(v, Fraction)


@pytest.mark.parametrize("n", range(2, 9))
def test_lemma_certificate(n):
    s = Fraction(1, 4 * n * n)
    v = lp_bound(lemma_certificate(n, s))
    assert v == 2 * n * (1 - s) / (1 - n * s)
    assert v < 2 * n + 1
    s = Fraction(9, 10 * (2 * n * n - n))
    assert lp_bound(lemma_certificate(n, s)) < 2 * n + 1


def test_constant_certificate():
    assert lp_bound(LPCertificate.from_monomial(3, [1], -2)) == 1
    with pytest.raises(CertificateError):
        lp_bound(LPCertificate.from_monomial(3, [1], -1))


def test_invalid_certificates():
    with pytest.raises(CertificateError):
        lp_bound(LPCertificate.from_monomial(3, parse_polynomial("t*(t+1)"), 0.5))
    with pytest.raises(CertificateError):
        lp_bound(LPCertificate.from_monomial(3, parse_polynomial("-t"), 0))
    with pytest.raises(CertificateError):
        lp_bound(LPCertificate(3, (-1, 1), 0))


def test_find_positive_narrow_bump():
    f = lambda t: 1e-8 - (t - 0.123456) ** 2
    t = find_positive_point(f, -1.0, 1.0, n=100)
    assert t is not None and f(t) > 0


def test_lp_inequality_crosspolytope_equality():
    for d in (2, 3, 5):
        cert = LPCertificate.from_monomial(d, parse_polynomial("t*(t+1)"), 0)
        rep = lp_inequality_check(crosspolytope_vertices(d), cert)
        assert rep.slack == pytest.approx(0.0, abs=1e-12)


def test_lp_inequality_single_point():
    cert = LPCertificate.from_monomial(3, parse_polynomial("t*(t+1)"), 0)
    rep = lp_inequality_check([[1.0, 0, 0]], cert)
    assert rep.lhs == pytest.approx(2.0) and rep.rhs == pytest.approx(1 / 3) and rep.holds


@pytest.mark.parametrize("d", [3, 4, 5])
def test_perturbed_crosspolytope_pair_floor(d, rng):
    eps = 1e-4
    X = tangent_perturb(rng, crosspolytope_vertices(d) @ random_rotation(rng, d), eps)
    cert = LPCertificate.from_monomial(d, parse_polynomial("t*(t+1)"), 0)
    rep = lp_inequality_check(X, cert)
    floor = -4 * d * (d - 1) * math.sin(2 * eps)
    assert rep.min_pair_value >= floor


def test_lp_inequality_random_configs(rng):
    worst = math.inf
    for k in range(1000):
        d = 2 + k % 4
        n = int(rng.integers(2, 12))
        X = rng.normal(size=(n, d))
        X /= np.linalg.norm(X, axis=1)[:, None]
        s = float(rng.uniform(-0.5, 0.5))
        cert = LPCertificate.from_monomial(d, [-s, 1 - s, 1], s)
        worst = min(worst, lp_inequality_check(X, cert).slack)
    assert worst >= -1e-9


def test_classify_exact():
    d = 4
    c = classify_crosspolytope_pairs(crosspolytope_vertices(d), 0.0)
    assert len(c.pairs(NEAR_ANTIPODAL)) == d
    assert len(c.pairs(NEAR_ORTHOGONAL)) == 2 * d * (2 * d - 1) // 2 - d
    assert sorted(c.opposite[c.opposite[i]] for i in range(2 * d)) == list(range(2 * d))


def test_classify_perturbed(rng):
    eps = 1e-5
    X = tangent_perturb(rng, crosspolytope_vertices(3), eps)
    c = classify_crosspolytope_pairs(X, eps)
    assert c.eta == pytest.approx(48 * math.sin(2e-5))
    assert c.pairs(NEAR_ANTIPODAL) == [(0, 3), (1, 4), (2, 5)]


def test_classify_structural_violation():
    X = crosspolytope_vertices(3).copy()
    X[1] = [-0.5, math.sqrt(3) / 2, 0]
    with pytest.raises(StructuralViolation):
        classify_crosspolytope_pairs(X, 1e-6)


def test_parse_polynomial():
    assert parse_polynomial("(t+1)^2") == [1, 2, 1]
    assert parse_polynomial("-t + 3") == [3, -1]
    with pytest.raises(ValueError):
        parse_polynomial("x*t")


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.lists(st.integers(-5, 5), min_size=1, max_size=5))
def test_gegenbauer_roundtrip(d, poly):
    coeffs = expand_in_gegenbauer(d, poly)
    t = np.linspace(-1, 1, 17)
    direct = sum(c * t**k for k, c in enumerate(poly))
    assert np.abs(gegenbauer_series(d, coeffs, t) - direct).max() <= 1e-11


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.floats(-0.9, 0.9))
def test_lemma_family_bound_formula(n, s):
    s = Fraction(s).limit_denominator(10**6)
    cert = lemma_certificate(n, s)
    if cert.coeffs[0] > 0:
        assert lp_bound(cert) == 2 * n * (1 - s) / (1 - n * s)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.floats(0, 1e-4))
def test_eta_formula(d, eps):
    assert crosspolytope_eta(d, eps) == pytest.approx(8 * d * (d - 1) * math.sin(2 * eps))
