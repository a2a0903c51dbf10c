"""End-to-end analysis: base tail, corrected tail, reference tail and checks."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .base_solver import BaseSolution, solve_base
from .config import AnalysisConfig
from .corrected import (AffineInH, CorrectedTail, CorrectionDecomposition, CorrectionEvaluator,
                        correction_transform, corrected_tail, direct_correction,
                        mg1_corollary_tail, theorem3_decompose)
from .inversion import dual_invert, euler
from .oracle import ExactMixtureSolution, solve_mixture


@dataclass(frozen=True)
class ResultRow:
    t: float
    exact: float | None
    ph: float
    corrected_ph: float

    @property
    def rel_err_ph(self) -> float | None:
        return _rel(self.ph, self.exact)

    @property
    def rel_err_corrected(self) -> float | None:
        return _rel(self.corrected_ph, self.exact)


def _rel(approx: float, exact: float | None) -> float | None:
    if exact is None or not exact > 0:
        return None
    return abs(approx - exact) / exact


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    base: BaseSolution
    K: AffineInH | None
    decomposition: CorrectionDecomposition | None
    corrected: CorrectedTail
    exact: ExactMixtureSolution | None
    rows: list = field(default_factory=list)

    @property
    def load(self) -> float:
        return self.config.model.lam_eff * self.config.mixture.mean

    @property
    def base_load(self) -> float:
        return self.config.model.lam_eff * self.config.mixture.ph.mean


def run_analysis(cfg: AnalysisConfig, with_exact: bool | None = None, decompose: bool = True) -> AnalysisResult:
    """Compute every column for the configured grid.

    ``with_exact`` overrides the config's oracle switch.
    """
    m, mix = cfg.model, cfg.mixture
    m.check_stable(mix.mean)
    base = solve_base(m, mix.ph)
    K = dec = None
    if mix.eps > 0:
        K = correction_transform(base, mix)
        if decompose:
            dec = theorem3_decompose(K, base, mix)
    ct = corrected_tail(base, mix, K=K)
    use_exact = cfg.oracle_enabled if with_exact is None else with_exact
    exact = solve_mixture(m, mix, base) if use_exact else None
    t = cfg.grid
    ph = np.atleast_1d(base.tail(t))
    corr = np.atleast_1d(ct(t))
    ex = np.atleast_1d(exact.tail(t, cfg.inversion)) if exact is not None else None
    rows = [ResultRow(float(t[i]), None if ex is None else float(ex[i]), float(ph[i]), float(corr[i]))
            for i in range(t.size)]
    return AnalysisResult(cfg, base, K, dec, ct, exact, rows)


# -- validation suite -------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<46} value={self.value:.3e}  tol={self.tol:.1e}"


def _check(name, value, tol) -> Check:
    value = float(value)
    return Check(name, value, tol, bool(np.isfinite(value) and value <= tol))


def fd_correction_error(base: BaseSolution, mixture, K: AffineInH, pts, step: float = 1e-6) -> float:
    """Largest relative gap between ``K`` and a finite difference of the mixture transform."""
    sol = solve_mixture(base.model, mixture.with_eps(step), base)
    fd = (sol.wlst(pts) - base.wlst(pts)) / step
    return float(np.max(np.abs(fd - K(pts)) / np.abs(K(pts))))


def run_checks(res: AnalysisResult) -> list[Check]:
    """Cross-checks between analytic stages and numerical references."""
    cfg, base = res.config, res.base
    m, mix = cfg.model, cfg.mixture
    checks = []
    checks.append(_check("workload transform at 0 equals 1", abs(base.wlst(0.0) - 1.0), 1e-10))
    checks.append(_check("right half-plane root count is N", abs(len(base.roots) - m.n_states), 0.0))
    res_a = max([abs(base.u @ a) for a in base.a_vecs], default=0.0)
    checks.append(_check("u orthogonal to null vectors", res_a, 1e-9))
    rhs = m.pi @ (1.0 / m.rates - mix.ph.mean * m.real_prob)
    checks.append(_check("u normalization (relative)", abs(base.u @ (1.0 / m.rates) - rhs) / abs(rhs), 1e-10))
    tpos = cfg.grid[cfg.grid > 0]
    if tpos.size:
        num = euler(lambda s: (1.0 - base.wlst(s)) / s, tpos)
        checks.append(_check("analytic base tail vs inversion", np.max(np.abs(num - base.tail(tpos))), 1e-8))
    checks.append(_check("base tail imaginary residue", base.dist.me.imag_residue(cfg.grid), 1e-10))
    if res.K is not None:
        K = res.K
        checks.append(_check("correction transform at 0", abs(K.at_zero()), 1e-8))
        rng = np.random.default_rng(7)
        pts = rng.uniform(0.3, 4.0, 10) + 1j * rng.uniform(-4.0, 4.0, 10)
        direct = direct_correction(base, mix, K.du)(pts)
        checks.append(_check("rational vs matrix correction transform",
                             np.max(np.abs(direct - K(pts)) / np.abs(direct)), 1e-8))
        checks.append(_check("correction transform vs finite difference", fd_correction_error(base, mix, K, pts), 1e-3))
        if res.decomposition is not None:
            checks.append(_check("basis reconstruction residual", res.decomposition.residual, 1e-8))
        ev = res.corrected.corr
        checks.append(_check("correction imaginary residue", ev.imag_residue(cfg.grid), 1e-10))
        if m.n_states == 1 and m.real_prob[0] == 1.0:
            cor = mg1_corollary_tail(m.lam_eff, mix, base, cfg.grid)
            checks.append(_check("Poisson closed form vs general pipeline",
                                 np.max(np.abs(cor - res.corrected(cfg.grid))), 1e-8))
    if res.exact is not None:
        sol = res.exact
        checks.append(_check("mixture transform at 0 equals 1", abs(sol.wlst_at_zero() - 1.0), 1e-8))
        if tpos.size:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                _, _, diff = dual_invert(lambda s: (1.0 - sol.wlst(s, True)) / s, tpos, warn=False)
            checks.append(_check("Euler vs Talbot on mixture transform", diff, 1e-6))
        ex = np.array([r.exact for r in res.rows])
        co = np.array([r.corrected_ph for r in res.rows])
        checks.append(_check("max |corrected - exact|", np.max(np.abs(co - ex)), 1e-3))
        pos = ex > 0
        if np.any(pos) and mix.eps > 0:
            checks.append(_check("max relative error of corrected", np.max(np.abs(co - ex)[pos] / ex[pos]),
                                 5 * mix.eps))
        if res.K is not None:
            probe = np.array([1.0, 5.0, 10.0])
            step = 1e-4
            fd = (solve_mixture(m, mix.with_eps(step), base).tail(probe, cfg.inversion) - base.tail(probe)) / step
            corr = res.corrected.corr(probe)
            checks.append(_check("first-order consistency of corr(t)", np.max(np.abs(fd - corr) / np.abs(corr)), 3e-2))
    return checks
