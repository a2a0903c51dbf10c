import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from corrected_ph import (HeavyComponent, MapModel, MixtureService, RationalLST, correction_transform,
                          corrected_tail, mg1_corollary_tail, perturb_roots, perturb_u, solve_base,
                          solve_mixture, theorem3_decompose)
from corrected_ph.analysis import fd_correction_error
from corrected_ph.corrected import direct_correction
from corrected_ph.exceptions import NotPoisson

FD_EPS = 1e-5


@pytest.fixture(scope="module")
def e2_K(e2_base, e2_mixture):
    return correction_transform(e2_base, e2_mixture)


@pytest.fixture(scope="module")
def cyclic3_mixture(exp3, aw2):
    return MixtureService(0.01, exp3, aw2)


@pytest.fixture(scope="module")
def uneven():
    m = MapModel([4.0, 6.0], [[0.3, 0.7], [0.6, 0.4]], [0.5, 1.0])
    ph = RationalLST.exponential(6.0)
    mix = MixtureService(0.01, ph, HeavyComponent.aw_sqrt(2.0))
    return solve_base(m, ph), mix


def test_zero_root_does_not_move(e2_base, e2_mixture):
    ds = perturb_roots(e2_base, e2_mixture)
    assert ds[0] == 0


def test_root_and_boundary_slopes_match_finite_difference(e2_base, e2_mixture):
    ds = perturb_roots(e2_base, e2_mixture)
    du = perturb_u(e2_base, e2_mixture, ds)
    sol = solve_mixture(e2_base.model, e2_mixture.with_eps(FD_EPS), e2_base)
    assert_allclose(ds[1:], (sol.roots[1:] - e2_base.roots[1:]) / FD_EPS, rtol=1e-3)
    assert_allclose(du, (sol.u - e2_base.u) / FD_EPS, rtol=1e-3)
    assert_allclose(ds[1], 1.22369, rtol=1e-5)
    assert_allclose(du, [-0.12704, -0.28962], rtol=1e-4)


@pytest.mark.parametrize("lam, q", [(1.0, 1.0), (2.0, 0.5)])
def test_scalar_boundary_slope(lam, q, exp3, aw2):
    base = solve_base(MapModel([lam], [[1.0]], [q]), exp3)
    mix = MixtureService(0.01, exp3, aw2)
    assert_allclose(perturb_u(base, mix), [-lam * (aw2.mean - exp3.mean) * q], rtol=1e-12)


def test_degenerate_mixture_has_no_correction(e2_base, exp3):
    mix = MixtureService(0.01, exp3, HeavyComponent.from_rational(exp3))
    assert_allclose(perturb_roots(e2_base, mix), 0.0, atol=1e-12)
    assert_allclose(perturb_u(e2_base, mix), 0.0, atol=1e-12)
    K = correction_transform(e2_base, mix)
    s = np.array([0.3, 1 + 1j, 4 - 2j, 10.0])
    assert np.max(np.abs(K(s))) < 1e-12
    assert K.is_zero
    dec = theorem3_decompose(K, e2_base, mix)
    assert all(np.all(v == 0) for v in dec.coeffs.values())


def test_zero_eps_is_bitwise_base(e2_base, e2_mixture):
    t = np.linspace(0, 50, 11)
    ct = corrected_tail(e2_base, e2_mixture.with_eps(0.0))
    assert np.array_equal(ct(t), e2_base.tail(t))


@pytest.mark.parametrize("which", ["e2", "cyclic3", "uneven"])
def test_correction_transform_properties(which, request, e2_mixture, rhp_points):
    if which == "e2":
        base, mix = request.getfixturevalue("e2_base"), e2_mixture
    elif which == "cyclic3":
        base, mix = request.getfixturevalue("cyclic3_base"), request.getfixturevalue("cyclic3_mixture")
    else:
        base, mix = request.getfixturevalue("uneven")
    K = correction_transform(base, mix)
    assert abs(K.at_zero()) < 1e-8
    direct = direct_correction(base, mix, K.du)(rhp_points)
    assert_allclose(K(rhp_points), direct, rtol=1e-8)
    assert fd_correction_error(base, mix, K, rhp_points[:10]) < 1e-3


def test_mg1_transform_matches_closed_form(mg1_base, exp3, aw2, rhp_points):
    mix = MixtureService(0.01, exp3, aw2)
    K = correction_transform(mg1_base, mix)
    s, w = rhp_points, mg1_base.wlst(rhp_points)
    lam, mp, mh = 1.0, exp3.mean, aw2.mean
    expected = lam / (1 - lam * mp) * ((mp - mh) * w + w ** 2 * ((1 - aw2.lst(s)) / s - (1 - exp3(s)) / s))
    assert_allclose(K(s), expected, rtol=1e-8)


def test_mg1_decomposition_shape(mg1_base, exp3, aw2):
    mix = MixtureService(0.01, exp3, aw2)
    dec = theorem3_decompose(correction_transform(mg1_base, mix), mg1_base, mix)
    lam, mp, mh = 1.0, exp3.mean, aw2.mean
    ue = 1 - lam * mp
    assert_allclose(dec.coeffs["alpha"], [lam * (mp - mh) / (1 - lam * mp) * ue], rtol=1e-8)
    assert abs(dec.coeffs["gamma"][0]) > 0.1
    for name, vals in dec.coeffs.items():
        if name not in ("alpha", "gamma"):
            assert np.all(np.abs(vals) < 1e-10), name
    assert dec.residual < 1e-8


@pytest.mark.parametrize("which", ["e2_base", "cyclic3_base"])
def test_decomposition_reconstructs(which, request, e2_mixture):
    base = request.getfixturevalue(which)
    dec = theorem3_decompose(correction_transform(base, e2_mixture), base, e2_mixture)
    assert dec.residual < 1e-8
    assert dec.real_after_pairing() < 1e-10
    assert_allclose(dec.prefactor, 1 / base.atom.real)


def test_conjugate_roots_give_real_correction(cyclic3_base, cyclic3_mixture):
    assert np.any(np.abs(cyclic3_base.roots.imag) > 1)
    ct = corrected_tail(cyclic3_base, cyclic3_mixture)
    assert ct.corr.imag_residue(np.linspace(0, 20, 9)) < 1e-10


def test_first_order_consistency(e2_base, e2_mixture):
    step = 1e-4
    t = np.array([1.0, 5.0, 10.0])
    exact = solve_mixture(e2_base.model, e2_mixture.with_eps(step), e2_base).tail(t)
    corr = corrected_tail(e2_base, e2_mixture).corr(t)
    assert_allclose((exact - e2_base.tail(t)) / step, corr, rtol=3e-2)


@pytest.mark.parametrize("heavy", [HeavyComponent.aw_sqrt(2.0), HeavyComponent.pareto(3.0, 2.0)])
def test_poisson_closed_form_equals_general_pipeline(mg1_base, exp3, heavy):
    mix = MixtureService(0.01, exp3, heavy)
    t = np.array([0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
    general = corrected_tail(mg1_base, mix, t)
    assert_allclose(mg1_corollary_tail(1.0, mix, mg1_base, t), general, atol=1e-8)


def test_poisson_correction_positive_far_out(mg1_base, exp3):
    mix = MixtureService(0.01, exp3, HeavyComponent.pareto(3.0, 2.0))
    t = np.array([40.0, 80.0])
    corr = (mg1_corollary_tail(1.0, mix, mg1_base, t) - mg1_base.tail(t)) / mix.eps
    assert np.all(corr > 0)
    # dominated by the excess-tail term
    lead = mix.heavy.mean / (1 - exp3.mean) * mix.heavy.excess_tail(t)
    assert_allclose(corr, lead, rtol=0.5)


def test_closed_form_rejects_non_poisson(e2_base, e2_mixture):
    with pytest.raises(NotPoisson):
        mg1_corollary_tail(2.5, e2_mixture, e2_base, 1.0)


def test_corrected_values_stay_in_unit_interval(e2_base, e2_mixture):
    t = np.linspace(0, 50, 26)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        vals = corrected_tail(e2_base, e2_mixture, t)
    assert np.all((vals >= 0) & (vals <= 1))
