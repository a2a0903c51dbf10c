import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from corrected_ph.exceptions import ZeroPolynomial
from corrected_ph.rational_core import (Poly, RationalFn, partial_fractions, partial_fractions_known,
                                        poly_roots, rational_adjugate, rational_det, evaluate_matrix)

S = RationalFn(Poly([0.0, 1.0]), cancel=False)


def e2_matrix():
    b = RationalFn(Poly([3.0]), Poly([3.0, 1.0]))
    return [[S - 5.0, RationalFn.const(5.0)], [b * 5.0, S - 5.0]]


@pytest.mark.parametrize("coeffs, expected", [
    ([-5.0, -7.0, 1.0], [-0.653312, 7.653312]),
    ([1.0, 0.0, 1.0], [-1j, 1j]),
])
def test_poly_roots_examples(coeffs, expected):
    rs = poly_roots(Poly(coeffs))
    got = sorted(rs.values, key=lambda z: (z.real, z.imag))
    assert_allclose(got, expected, atol=1e-6)
    assert np.all(rs.multiplicity == 1)


def test_double_root_is_flagged():
    rs = poly_roots(Poly.from_roots([2.0, 2.0]))
    assert_allclose(rs.values, [2.0, 2.0], atol=1e-6)
    assert list(rs.multiplicity) == [2, 2]


def test_zero_polynomial_rejected():
    with pytest.raises(ZeroPolynomial):
        poly_roots(Poly([0.0]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=10, unique=True).filter(
    lambda r: min((abs(a - b) for i, a in enumerate(r) for b in r[i + 1:]), default=1.0) > 0.3))
def test_roots_annihilate_random_polynomials(roots):
    p = Poly.from_roots(roots)
    found = poly_roots(p).values
    scale = np.sum(np.abs(p.coeffs))
    assert len(found) == len(roots)
    assert np.max(np.abs(p(found))) <= scale * 1e-9


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=9))
def test_real_polynomials_give_conjugate_closed_roots(coeffs):
    coeffs = coeffs + [1.0]
    r = poly_roots(Poly(coeffs)).values
    gap = np.abs(np.conj(r)[:, None] - r[None, :]).min(axis=1)
    assert np.all(gap <= 1e-6 * (1 + np.abs(r)))


def test_rational_det_e2():
    det = rational_det(e2_matrix())
    expected = RationalFn(Poly([0.0, -5.0, -7.0, 1.0]), Poly([3.0, 1.0]))
    pts = np.array([0.5 + 1j, 2.0, 4.0 - 3j])
    assert_allclose(det(pts), expected(pts), rtol=1e-12)


def test_rational_adjugate_e2():
    adj = rational_adjugate(e2_matrix())
    s = 1.3 + 0.4j
    expected = np.array([[s - 5, -5], [-15 / (3 + s), s - 5]])
    assert_allclose(evaluate_matrix(adj, s), expected, rtol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_det_of_identity_and_adjugate_of_diagonal(n):
    f = [RationalFn(Poly([k + 1.0, 1.0])) for k in range(n)]
    M = [[f[i] if i == j else RationalFn.const(0.0) for j in range(n)] for i in range(n)]
    s = 0.7 + 0.2j
    vals = np.array([g(s) for g in f])
    assert_allclose(rational_det(M)(s), np.prod(vals), rtol=1e-12)
    adj = evaluate_matrix(rational_adjugate(M), s)
    assert_allclose(adj, np.diag([np.prod(np.delete(vals, i)) for i in range(n)]), rtol=1e-12)


def test_adjugate_identity_random_matrix():
    rng = np.random.default_rng(3)
    n = 3
    M = [[RationalFn(Poly(rng.normal(size=2)), Poly([rng.uniform(1, 3), 1.0])) for _ in range(n)]
         for _ in range(n)]
    det, adj = rational_det(M), rational_adjugate(M)
    for s in (0.3 + 1j, 2.0, 1.1 - 0.5j):
        Ms, As = evaluate_matrix(M, s), evaluate_matrix(adj, s)
        err = np.linalg.norm(Ms @ As - det(s) * np.eye(n))
        assert err <= 1e-9 * np.linalg.norm(Ms) * np.linalg.norm(As)


def test_partial_fractions_examples():
    w = RationalFn(Poly(np.array([3.919896, 1.0]) / 6), Poly([0.653312, 1.0]))
    pf = partial_fractions(w)
    assert_allclose(pf.constant, 1 / 6, rtol=1e-9)
    assert_allclose(pf.poles, [-0.653312])
    assert_allclose(pf.residues, [0.544431], rtol=1e-5)

    pf = partial_fractions(RationalFn(Poly([1.0]), Poly([1.0, 1.0])))
    assert pf.constant == 0
    assert_allclose(pf.residues, [1.0])

    pf = partial_fractions(RationalFn(Poly([2.0, 1.0]), Poly.from_roots([-1.0, -3.0])))
    assert_allclose(sorted(pf.residues.real), [0.5, 0.5], rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 8.0), min_size=1, max_size=6, unique=True).filter(
    lambda r: min((abs(a - b) for i, a in enumerate(r) for b in r[i + 1:]), default=1.0) > 0.2),
    st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_partial_fractions_resum(rates, num):
    num = num[:len(rates) + 1]
    f = RationalFn(Poly(num), Poly.from_roots([-r for r in rates]))
    if f.num.is_zero:
        return
    pf = partial_fractions(f)
    pts = np.array([0.5 + 0.5j, 1.7 - 2j, 3.0])
    # measured against the size of the individual terms, which may cancel
    scale = abs(pf.constant) + sum(np.abs(r / (pts - p)) for p, r, _ in pf.terms)
    assert np.all(np.abs(pf(pts) - f(pts)) <= 1e-9 * scale)


def test_partial_fractions_known_repeated_pole():
    num = Poly([1.0, 2.0])
    poles = [-1.0, -1.0, -2.0]
    pf = partial_fractions_known(num, poles)
    f = RationalFn(num, Poly.from_roots(poles), cancel=False)
    pts = np.array([0.3, 1.0 + 1j, 4.0 - 2j])
    assert_allclose(pf(pts), f(pts), rtol=1e-12)
    assert sorted(order for _, _, order in pf.terms) == [1, 1, 2]
