import numpy as np
import pytest
from numpy.testing import assert_allclose

from corrected_ph import InversionSettings, MixtureService, exact_mixture_tail, solve_mixture
from corrected_ph.exceptions import NewtonDivergence
from corrected_ph.inversion import dual_invert
from corrected_ph.oracle import adjugate, newton_root

GRID = np.linspace(0, 50, 11)


@pytest.fixture(scope="module")
def e2_exact(e2_model, e2_mixture, e2_base):
    return solve_mixture(e2_model, e2_mixture, e2_base)


@pytest.mark.parametrize("t, expected, tol", [(0.0, 0.8375, 1e-12), (5.0, 0.061452, 5e-4), (50.0, 0.009294, 5e-4)])
def test_exact_column_examples(e2_exact, t, expected, tol):
    assert_allclose(e2_exact.tail(t), expected, atol=tol)


def test_roots_refined(e2_exact, e2_model, e2_mixture):
    assert len(e2_exact.roots) == e2_model.n_states
    assert e2_exact.roots[0] == 0
    assert np.all(e2_exact.roots[1:].real > 0)
    for r in e2_exact.roots[1:]:
        assert abs(np.linalg.det(e2_model.matrix(r, e2_mixture.lst(r)))) < 1e-10


def test_normalization(e2_exact):
    assert abs(e2_exact.wlst_at_zero() - 1) < 1e-8
    # the workload mean is infinite here, so the approach to 1 is like sqrt(s)
    gap = [1 - e2_exact.wlst(s).real for s in (1e-6, 1e-8)]
    assert_allclose(gap[0] / gap[1], 10.0, rtol=0.2)


def test_tail_nonincreasing(e2_exact):
    vals = e2_exact.tail(GRID)
    assert np.all(np.diff(vals) <= 1e-9)


def test_euler_talbot_agree(e2_exact):
    _, _, diff = dual_invert(lambda s: (1 - e2_exact.wlst(s, True)) / s, GRID[1:], warn=False)
    assert diff < 1e-6
    talbot = e2_exact.tail(GRID, InversionSettings("talbot"))
    assert_allclose(talbot, e2_exact.tail(GRID), atol=1e-6)


@pytest.mark.parametrize("which", ["e2", "cyclic3"])
def test_zero_eps_matches_base(which, request, e2_mixture):
    model = request.getfixturevalue(f"{which}_model")
    base = request.getfixturevalue(f"{which}_base")
    mix = e2_mixture.with_eps(0.0)
    t = np.linspace(0, 20, 9)
    assert_allclose(exact_mixture_tail(model, mix, t, base), base.tail(t), atol=1e-7)


def test_cyclic_model_with_mixture(cyclic3_model, cyclic3_base, e2_mixture):
    sol = solve_mixture(cyclic3_model, e2_mixture, cyclic3_base)
    assert_allclose(sol.roots[1], np.conj(sol.roots[2]), rtol=1e-9)
    assert abs(sol.wlst_at_zero() - 1) < 1e-8
    assert_allclose(sol.tail(0.0), cyclic3_model.lam_eff * e2_mixture.mean)


def test_newton_gives_up(e2_model, e2_mixture):
    with pytest.raises(NewtonDivergence):
        newton_root(e2_model, e2_mixture, 3.0 + 1j, max_iter=0)


def test_adjugate_identity():
    A = np.array([[1.0, 2.0, 0.5], [0.0, 3.0, 1.0], [2.0, 1.0, 1.0]])
    assert_allclose(A @ adjugate(A), np.linalg.det(A) * np.eye(3), atol=1e-12)
    S = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert_allclose(adjugate(S), [[4.0, -2.0], [-2.0, 1.0]])
