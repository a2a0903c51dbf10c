"""Acceptance criteria: the Erlang-2 reference table and the supporting properties.

Each test prints one PASS/FAIL line (visible in ``pytest -v`` output) before
asserting, so a full run doubles as the acceptance report.
"""
import time

import numpy as np
import pytest
from scipy.integrate import quad

from corrected_ph import (HeavyComponent, MapModel, MixtureService, RationalLST, correction_transform,
                          corrected_tail, mg1_corollary_tail, solve_base, solve_mixture, theorem3_decompose)
from corrected_ph.analysis import fd_correction_error
from corrected_ph.distributions import MatrixExpDist
from corrected_ph.inversion import dual_invert

GRID = np.arange(0.0, 55.0, 5.0)
PH_T = np.array([0.0, 5.0, 10.0, 20.0, 40.0, 50.0])
PH_COLUMN = np.array([0.833333, 0.031781, 0.001212, 1.76e-6, 3.73e-12, 5.42e-15])
EXACT_COLUMN = np.array([0.8375, 0.061452, 0.023269, 0.017579, 0.014979, 0.013301, 0.012090, 0.011162,
                         0.010419, 0.009809, 0.009294])
CORRECTED_COLUMN = np.array([0.837213, 0.060882, 0.023544, 0.017862, 0.014091, 0.013126, 0.011867, 0.010943,
                             0.010220, 0.009601, 0.009106])

PH_ABS_TOL = 1e-6
PH_TINY = 1e-10
COLUMN_ABS_TOL = 5e-4
MAX_ABS_DIFF = 1e-3
REL_BOUND_FACTOR = 5.0
PH_FINAL_REL = 0.99
ZERO_K_TOL = 1e-12
CLOSED_FORM_TOL = 1e-8
RUNTIME = {1: 1.0, 2: 60.0, 3: 120.0}


@pytest.fixture
def announce(capsys):
    def emit(criterion, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {criterion}] {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return emit


def e2_parts():
    model = MapModel([5.0, 5.0], [[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0])
    ph = RationalLST.exponential(3.0)
    return model, ph, MixtureService(0.01, ph, HeavyComponent.aw_sqrt(2.0))


def leading_digit_match(a: float, b: float) -> bool:
    return f"{a:.0e}" == f"{b:.0e}"


def test_criterion_1_ph_column(announce):
    start = time.perf_counter()
    model, ph, _ = e2_parts()
    vals = solve_base(model, ph).tail(PH_T)
    elapsed = time.perf_counter() - start
    ok = [leading_digit_match(v, p) if p < PH_TINY else abs(v - p) <= PH_ABS_TOL
          for v, p in zip(vals, PH_COLUMN)]
    passed = all(ok) and elapsed < RUNTIME[1]
    worst = np.max(np.abs(vals - PH_COLUMN)[PH_COLUMN >= PH_TINY])
    announce(1, passed, f"max |ph - table| = {worst:.1e} (tol {PH_ABS_TOL:g}); tiny entries "
             f"{', '.join(f'{v:.2e}' for v in vals[PH_COLUMN < PH_TINY])}; {elapsed:.2f}s")
    assert passed


def test_criterion_2_exact_column(announce):
    start = time.perf_counter()
    model, ph, mix = e2_parts()
    vals = solve_mixture(model, mix, solve_base(model, ph)).tail(GRID)
    elapsed = time.perf_counter() - start
    diff = np.abs(vals - EXACT_COLUMN)
    passed = bool(np.all(diff <= COLUMN_ABS_TOL)) and elapsed < RUNTIME[2]
    announce(2, passed, f"max |exact - table| = {diff.max():.1e} at t={GRID[diff.argmax()]:g} "
             f"(tol {COLUMN_ABS_TOL:g}); {elapsed:.2f}s")
    assert passed


def test_criterion_3_corrected_column(announce):
    start = time.perf_counter()
    model, ph, mix = e2_parts()
    vals = corrected_tail(solve_base(model, ph), mix, GRID)
    elapsed = time.perf_counter() - start
    diff = np.abs(vals - CORRECTED_COLUMN)
    bad = GRID[diff > COLUMN_ABS_TOL]
    passed = bad.size == 0 and elapsed < RUNTIME[3]
    detail = f"max |corrected - table| = {diff.max():.1e} (tol {COLUMN_ABS_TOL:g}); {elapsed:.2f}s"
    if bad.size:
        detail += f"; outside tolerance at t = {', '.join(f'{t:g}' for t in bad)}"
    announce(3, passed, detail)
    assert passed


@pytest.fixture(scope="module")
def e2_columns():
    model, ph, mix = e2_parts()
    base = solve_base(model, ph)
    exact = solve_mixture(model, mix, base).tail(GRID)
    return base.tail(GRID), corrected_tail(base, mix, GRID), exact, mix.eps


def test_criterion_4_error_magnitudes(announce, e2_columns):
    ph, corr, exact, eps = e2_columns
    abs_diff = np.max(np.abs(corr - exact))
    rel = np.max(np.abs(corr - exact) / exact)
    ph_rel = abs(ph[-1] - exact[-1]) / exact[-1]
    passed = abs_diff <= MAX_ABS_DIFF and rel <= REL_BOUND_FACTOR * eps and ph_rel >= PH_FINAL_REL
    announce(4, passed, f"max |corrected - exact| = {abs_diff:.1e} (<= {MAX_ABS_DIFF:g}); max relative "
             f"error {rel:.4f} (<= {REL_BOUND_FACTOR * eps:g}); ph relative error at t=50 {ph_rel:.6f} "
             f"(>= {PH_FINAL_REL})")
    assert passed


def test_criterion_5_degeneracy(announce):
    model, ph, mix = e2_parts()
    base = solve_base(model, ph)
    t = np.linspace(0, 50, 26)
    same = np.array_equal(corrected_tail(base, mix.with_eps(0.0), t), base.tail(t))
    flat = MixtureService(0.01, ph, HeavyComponent.from_rational(ph))
    K = correction_transform(base, flat)
    rng = np.random.default_rng(5)
    pts = rng.uniform(0.1, 10, 50) + 1j * rng.uniform(-10, 10, 50)
    kmax = float(np.max(np.abs(K(pts))))
    passed = same and kmax <= ZERO_K_TOL
    announce(5, passed, f"eps=0 bitwise identical: {same}; max |K| with H = B_p: {kmax:.1e} (tol {ZERO_K_TOL:g})")
    assert passed


def test_criterion_6_poisson_closed_form(announce):
    ph = RationalLST.exponential(3.0)
    mix = MixtureService(0.01, ph, HeavyComponent.aw_sqrt(2.0))
    base = solve_base(MapModel.poisson(1.0), ph)
    t = np.array([0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
    diff = np.max(np.abs(mg1_corollary_tail(1.0, mix, base, t) - corrected_tail(base, mix, t)))
    passed = diff <= CLOSED_FORM_TOL
    announce(6, passed, f"max |closed form - general| = {diff:.1e} (tol {CLOSED_FORM_TOL:g})")
    assert passed


def property_suite() -> dict:
    model, ph, mix = e2_parts()
    base = solve_base(model, ph)
    out = {}
    out["w(0) = 1"] = abs(base.wlst(0.0) - 1) <= 1e-10
    out["N roots, first at 0"] = (len(base.roots) == model.n_states and base.roots[0] == 0
                                  and np.all(base.roots[1:].real > 0))
    rhs = model.pi @ (1 / model.rates - ph.mean * model.real_prob)
    out["u residuals"] = (max(abs(base.u @ a) for a in base.a_vecs) < 1e-9
                          and abs(base.u @ (1 / model.rates) - rhs) < 1e-9)
    K = correction_transform(base, mix)
    out["reconstruction"] = theorem3_decompose(K, base, mix).residual < 1e-8
    sol = solve_mixture(model, mix, base)
    _, _, diff = dual_invert(lambda s: (1 - sol.wlst(s, True)) / s, GRID[1:], warn=False)
    out["Euler/Talbot"] = diff < 1e-6
    X, rho = MatrixExpDist.exponential(2.0), 1.5
    gaps = [abs(X.interval(t, rho).real
                - quad(lambda x: 2 * np.exp(-2 * x - rho * (x - t)), t, np.inf, epsabs=1e-14)[0])
            for t in (0.0, 0.8, 3.0)]
    out["interval identity"] = max(gaps) < 1e-8
    rng = np.random.default_rng(2)
    pts = rng.uniform(0.2, 5, 10) + 1j * rng.uniform(-5, 5, 10)
    out["K finite difference"] = fd_correction_error(base, mix, K, pts, step=1e-6) < 1e-3
    cyc = solve_base(MapModel.erlang_renewal(3, 7.5), ph)
    cyc_corr = corrected_tail(cyc, mix).corr
    out["conjugate realness"] = (np.any(np.abs(cyc.roots.imag) > 1)
                                 and cyc_corr.imag_residue(np.linspace(0, 20, 9)) < 1e-10
                                 and cyc.dist.me.imag_residue(np.linspace(0, 20, 9)) < 1e-10)
    return out


def test_criterion_7_property_suite(announce):
    results = property_suite()
    failed = [k for k, v in results.items() if not v]
    passed = not failed
    announce(7, passed, f"{len(results) - len(failed)}/{len(results)} properties hold"
             + (f"; failing: {', '.join(failed)}" if failed else ""))
    assert passed


def test_criterion_8_asymptotics_by_proxy(announce, e2_columns):
    # the asymptotic claim itself is out of reach; the finite-grid relative bound stands in for it
    model, ph, mix = e2_parts()
    base = solve_base(model, ph)
    far = np.array([60.0, 100.0, 150.0])
    mix = MixtureService(mix.eps, ph, HeavyComponent.aw_sqrt(2.0, t_max=far[-1]))
    exact = solve_mixture(model, mix, base).tail(far)
    rel = np.abs(corrected_tail(base, mix, far) - exact) / exact
    passed = bool(np.all(rel <= REL_BOUND_FACTOR * mix.eps))
    announce(8, passed, "not verifiable at desk scale; proxy: relative error "
             f"{', '.join(f'{r:.4f}' for r in rel)} at t = 60, 100, 150 (<= {REL_BOUND_FACTOR * mix.eps:g})")
    assert passed
