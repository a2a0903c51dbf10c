"""First-order correction for a service law mixed with a heavy-tailed part.

With service LST ``(1 - eps) * bp(s) + eps * h(s)`` the workload LST
becomes ``w_eps(s)``. The correction transform ``K = dw_eps/deps`` at
``eps = 0`` is affine in ``h``::

    K(s) = R0(s) + R1(s) * h(s)

with rational ``R0`` and ``R1``. The corrected tail is
``P(V > t) + eps * corr(t)``, where ``corr`` is the inverse Laplace
transform of ``-K(s) / s``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.integrate import quad_vec

from .base_solver import BaseSolution, null_vector, u_system
from .distributions import HeavyComponent, MatrixExpDist, MixtureService
from .exceptions import (BasisDeficiency, CancellationFailure, DegenerateRoot, NotPoisson,
                         QuadratureFailure, SingularSystem)
from .rational_core import (PartialFractions, Poly, RationalFn, cancel_known, group_poles,
                            partial_fractions_known)

QUAD_ABS_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-8
BASIS_TOL = 1e-7
CANCEL_RTOL = 1e-6


# -- perturbation of roots and of u -------------------------------------------


def _delta(mixture: MixtureService, s):
    """``h(s) - bp(s)``: derivative of the mixture LST in ``eps``."""
    return mixture.heavy.lst(s) - mixture.ph(s)


def perturb_roots(base: BaseSolution, mixture: MixtureService) -> np.ndarray:
    """First-order root motion ``ds_i/deps``; the entry for ``s_1 = 0`` is 0.

    Raises:
        DegenerateRoot: if the determinant has a vanishing slope at a root.
    """
    cm = base.cm
    D = base.model.perturbation_matrix
    ddet = cm.det.deriv()
    out = np.zeros(len(base.roots), dtype=complex)
    for i, r in enumerate(base.roots[1:], start=1):
        slope = ddet(r)
        if abs(slope) < 1e-10:
            raise DegenerateRoot(f"determinant slope vanishes at root {r:.6g}")
        out[i] = -_delta(mixture, r) * np.trace(cm.adj_at(r) @ D) / slope
    return out


def _matrix_slope(base: BaseSolution, s: complex) -> np.ndarray:
    """``dM/ds`` for the unperturbed service law."""
    m = base.model
    db = base.service.lst_fn.deriv()(s)
    return (db * m.real_prob)[:, None] * m.trans * m.rates[None, :] + np.eye(m.n_states)


def perturb_u(base: BaseSolution, mixture: MixtureService, ds=None) -> np.ndarray:
    """First-order change ``du/deps`` of the boundary vector.

    Raises:
        SingularSystem: if the differentiated system is singular.
    """
    m = base.model
    n = m.n_states
    if ds is None:
        ds = perturb_roots(base, mixture)
    D = m.perturbation_matrix
    da = np.zeros((len(base.roots) - 1, n), dtype=complex)
    for k, (r, a) in enumerate(zip(base.roots[1:], base.a_vecs)):
        Ms = base.cm(r)
        rhs = -(_matrix_slope(base, r) * ds[k + 1] + _delta(mixture, r) * D) @ a
        pin = int(np.argmax(np.abs(a)))
        bordered = np.vstack([Ms, np.eye(n)[pin]])
        da[k] = np.linalg.lstsq(bordered, np.append(rhs, 0.0), rcond=None)[0]
    A = u_system(m, base.a_vecs)
    rhs = np.empty(n, dtype=complex)
    rhs[0] = -(m.pi @ m.real_prob) * mixture.mean_shift
    rhs[1:] = -da @ base.u
    if np.linalg.cond(A) > 1e13:
        raise SingularSystem("differentiated u system is singular")
    return np.linalg.solve(A.T, rhs)


# -- the correction transform ---------------------------------------------------


def direct_correction(base: BaseSolution, mixture: MixtureService, du=None):
    """Matrix-based evaluator of ``K(s)``, independent of the rational forms."""
    if du is None:
        du = perturb_u(base, mixture)
    D = base.model.perturbation_matrix
    e = base.model.time_weights

    def K(s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.empty(s_arr.shape, dtype=complex)
        for idx, z in np.ndenumerate(s_arr):
            Mz = base.cm(z)
            right = np.linalg.solve(Mz, e)
            left = np.linalg.solve(Mz.T, base.u)
            out[idx] = z * du @ right - _delta(mixture, z) * z * (left @ D @ right)
        return out if np.ndim(s) else complex(out[0])

    return K


@dataclass(frozen=True)
class AffineInH:
    """``K(s) = R0(s) + R1(s) * h(s)``.

    ``R01 = R0 + R1`` is kept separately because it is analytic at zero,
    while ``R0`` and ``R1`` each have a simple pole there. ``poles01`` and
    ``poles1`` are the reduced pole multisets of ``R01`` and ``R1``.
    """

    R01: RationalFn
    R1: RationalFn
    poles01: list
    poles1: list
    heavy: HeavyComponent
    du: np.ndarray
    ds: np.ndarray

    @property
    def R0(self) -> RationalFn:
        a, b = self.R01, self.R1
        return RationalFn(a.num * b.den - b.num * a.den, a.den * b.den, cancel=False)

    def __call__(self, s):
        out = self.R01(s) + self.R1(s) * (self.heavy.lst(s) - 1.0)
        return out if np.ndim(out) else complex(out)

    def pf1(self) -> PartialFractions:
        return partial_fractions_known(self.R1.num, self.poles1, self.R1.den.lead)

    def at_zero(self) -> complex:
        """``K(0) = R01(0) - mean_h * Res_0 R1``; zero for a consistent transform."""
        res0 = sum(c for p, c, k in self.pf1().terms if p == 0 and k == 1)
        return complex(self.R01(0.0) - self.heavy.mean * res0)

    @property
    def is_zero(self) -> bool:
        """``K`` vanishes identically (checked at sample points, relative to its parts)."""
        pts = _sample_points(10, 3)
        parts = np.abs(self.R01(pts)) + np.abs(self.R1(pts))
        return bool(np.max(np.abs(self(pts))) <= 1e-12 * max(1.0, float(np.max(parts))))


def _minv_e_numerators(cm) -> list[Poly]:
    """Polynomials ``sum_j adjP_kj d_j f_j``: numerators of ``M^{-1} f`` over ``detP``."""
    n = cm.model.n_states
    f = cm.model.time_weights
    out = []
    for k in range(n):
        acc = Poly([0.0])
        for j in range(n):
            acc = acc + cm.adj_poly[k][j] * cm.row_dens[j] * complex(f[j])
        out.append(acc)
    return out


def _service_poles(base: BaseSolution) -> list[complex]:
    """Pole multiset of the phase-type LST, checked against its denominator."""
    me = base.service.me
    poles = [-a for a, k in zip(me.rates, me.powers) for _ in range(int(k) + 1)]
    den = base.service.lst_fn.den
    if len(poles) == den.degree and Poly.from_roots(poles).allclose(den.monic(), 1e-9):
        return poles
    return list(den.roots()) if den.degree else []


def correction_transform(base: BaseSolution, mixture: MixtureService) -> AffineInH:
    """Assemble ``K`` from the perturbed ``u`` and the adjugate polynomials."""
    cm = base.cm
    n = base.model.n_states
    D = base.model.perturbation_matrix
    ds = perturb_roots(base, mixture)
    du = perturb_u(base, mixture, ds)

    nv = _minv_e_numerators(cm)
    cols = []
    for j in range(n):
        acc = Poly([0.0])
        for i in range(n):
            acc = acc + cm.adj_poly[i][j] * complex(base.u[i])
        cols.append(acc * cm.row_dens[j])
    S = Poly([0.0])
    for j in range(n):
        for k in range(n):
            if D[j, k] != 0:
                S = S + cols[j] * nv[k] * D[j, k]
    du_nv = Poly([0.0])
    for k in range(n):
        du_nv = du_nv + nv[k] * complex(du[k])

    s = Poly([0.0, 1.0])
    detP = cm.det_poly
    dpoles = list(base.det_all_roots)
    b = base.service.lst_fn
    bpoles = _service_poles(base)

    num1, poles1 = cancel_known(-(s * S), dpoles * 2)
    R1 = RationalFn(num1, Poly.from_roots(poles1, detP.lead**2), cancel=False)
    # R0 + R1 = s du M^-1 e + (1 - bp) R1, over detP^2 * den(bp)
    num01 = s * (du_nv * detP * b.den + S * (b.num - b.den))
    num01, poles01 = cancel_known(num01, dpoles * 2 + bpoles)
    R01 = RationalFn(num01, Poly.from_roots(poles01, detP.lead**2 * b.den.lead), cancel=False)
    return AffineInH(R01, R1, poles01, poles1, mixture.heavy, du, ds)


# -- time-domain correction ---------------------------------------------------------


def _exp_poly(terms, t):
    """``sum c t^(k-1) e^(p t) / (k-1)!`` for partial-fraction terms ``(p, c, k)``."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for p, c, k in terms:
        out = out + c * t ** (k - 1) * np.exp(p * t) / factorial(k - 1)
    return out


def _is_rhp(p: complex) -> bool:
    return p.real > 1e-9 * (1.0 + abs(p))


def _quad(fun, a, b, **kw):
    val, err = quad_vec(fun, a, b, epsabs=QUAD_ABS_TOL * 1e-2, epsrel=1e-10, limit=400, **kw)
    if not np.all(np.isfinite(val)) or err > QUAD_ABS_TOL:
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} exceeds {QUAD_ABS_TOL:g}")
    return val


@dataclass
class CorrectionEvaluator:
    """Time-domain ``corr(t) = L^{-1}{-K/s}(t)``.

    Using ``h = 1 - s * L{Hbar}`` the transform splits into
    ``-(R0 + R1)/s``, which is rational, and ``R1 * L{Hbar}``. Poles of
    ``R1`` are handled by kind:

    * left half-plane: convolution of the exponential kernel with ``Hbar``;
    * zero: ``c0 * int_0^t Hbar = c0 * mean_h * (1 - Hbar_e(t))``;
    * right half-plane roots ``s_i``: these cancel against the rational
      part up to ``-c_i * int_0^inf exp(-s_i y) Hbar(t + y) dy``.
    """

    K: AffineInH
    rational_terms: list = field(init=False)
    kernel_terms: list = field(init=False)
    zero_coeff: complex = field(init=False)
    rhp_terms: list = field(init=False)
    cancellation: float = field(init=False)

    def __post_init__(self):
        heavy = self.K.heavy
        pf01 = partial_fractions_known(self.K.R01.num, list(self.K.poles01) + [0.0],
                                       self.K.R01.den.lead)
        pf1 = self.K.pf1()
        self.kernel_terms = [(p, c, k) for p, c, k in pf1.terms if p.real < 0 and p != 0]
        self.zero_coeff = sum(c for p, c, k in pf1.terms if p == 0 and k == 1)
        self.rhp_terms = [(p, c) for p, c, k in pf1.terms if _is_rhp(p) and k == 1]
        scale = max(1.0, max((abs(c) for _, c, _ in pf1.terms), default=1.0))
        bad = [abs(c) for p, c, k in pf1.terms if (p == 0 or _is_rhp(p)) and k > 1]
        # remaining growth of the rational part must cancel the right half-plane poles of R1
        worst = max(bad, default=0.0) / scale
        rat = []
        for p, c, k in pf01.terms:
            if _is_rhp(p):
                if k > 1:
                    worst = max(worst, abs(c) / scale)
                    continue
                match = [ci for pi, ci in self.rhp_terms if pi == p]
                lbar = (1.0 - heavy.lst(p)) / p
                # residue of (R0 + R1) / s at s_i is c_i * (1 - h(s_i)) / s_i
                expected = sum(match) * lbar
                worst = max(worst, abs(c - expected) / max(abs(c), scale * 1e-3))
            else:
                rat.append((p, -c, k))
        self.rational_terms = rat
        self.cancellation = float(worst)
        if worst > CANCEL_RTOL:
            raise CancellationFailure(f"right half-plane terms do not cancel (relative {worst:.2e})")

    def _kernel(self, t: float) -> complex:
        if not self.kernel_terms or t == 0:
            return 0j
        hbar = self.K.heavy.tail
        terms = self.kernel_terms

        def f(x):
            return complex(_exp_poly(terms, t - x)) * hbar(x)

        return complex(_quad(f, 0.0, t))

    def _rhp(self, t: float) -> complex:
        hbar = self.K.heavy.tail
        total = 0j
        for p, c in self.rhp_terms:
            width = 60.0 / p.real
            total += c * complex(_quad(lambda y, p=p: np.exp(-p * y) * hbar(t + y), 0.0, width))
        return total

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t_arr < 0):
            raise ValueError("t must be nonnegative")
        heavy = self.K.heavy
        out = _exp_poly(self.rational_terms, t_arr)
        out = out + self.zero_coeff * heavy.mean * (1.0 - np.asarray(heavy.excess_tail(t_arr)))
        for idx, tv in enumerate(t_arr):
            out[idx] += self._kernel(tv) - self._rhp(tv)
        vals = out.real
        return vals if np.ndim(t) else float(vals[0])

    def imag_residue(self, t) -> float:
        """Imaginary part of the conjugate-paired sum; should be round-off."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        heavy = self.K.heavy
        out = _exp_poly(self.rational_terms, t_arr)
        out = out + self.zero_coeff * heavy.mean * (1.0 - np.asarray(heavy.excess_tail(t_arr)))
        for idx, tv in enumerate(t_arr):
            out[idx] += self._kernel(tv) - self._rhp(tv)
        return float(np.max(np.abs(out.imag)))


@dataclass
class CorrectedTail:
    """``P(V > t) + eps * corr(t)`` with clamping to ``[0, 1]``."""

    base: BaseSolution
    eps: float
    corr: CorrectionEvaluator | None

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        base_vals = np.asarray(self.base.tail(t_arr), dtype=float)
        if self.eps == 0 or self.corr is None:
            out = base_vals
        else:
            out = base_vals + self.eps * self.corr(t_arr)
            outside = (out < 0) | (out > 1)
            if np.any(outside):
                warnings.warn(f"corrected tail left [0, 1] at {int(outside.sum())} points; clamped",
                              RuntimeWarning, stacklevel=2)
                out = np.clip(out, 0.0, 1.0)
        return out if np.ndim(t) else float(out[0])


def corrected_tail(base: BaseSolution, mixture: MixtureService, t=None, K: AffineInH | None = None):
    """Corrected tail evaluator, or its values when ``t`` is given.

    At ``eps = 0`` the base tail is returned unchanged.
    """
    if mixture.eps == 0:
        ct = CorrectedTail(base, 0.0, None)
    else:
        K = K if K is not None else correction_transform(base, mixture)
        ct = CorrectedTail(base, mixture.eps, CorrectionEvaluator(K))
    return ct if t is None else ct(t)


# -- Poisson fast path ---------------------------------------------------------------


def heavy_sum_tail(dist: MatrixExpDist, heavy: HeavyComponent, t):
    """``P(Y + H_e > t)`` for ``Y`` matrix-exponential and ``H_e`` the heavy excess."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.asarray(heavy.excess_tail(t_arr), dtype=float).copy()
    for idx, tv in enumerate(t_arr):
        if tv > 0:
            val = _quad(lambda x, tv=tv: heavy.tail(x) * dist.tail(tv - x), 0.0, tv)
            out[idx] += float(np.real(val)) / heavy.mean
    return out if np.ndim(t) else float(out[0])


def mg1_corollary_tail(lam: float, mixture: MixtureService, base: BaseSolution, t):
    """Closed-form corrected tail for Poisson arrivals.

    ``P(V > t) + eps * lam / (1 - lam mp) * [(mp - mh) P(V > t)
    + mh P(V + V' + H_e > t) - mp P(V + V' + P_e > t)]``.

    Raises:
        NotPoisson: if the arrival model has more than one state.
    """
    m = base.model
    if m.n_states != 1 or m.real_prob[0] != 1.0:
        raise NotPoisson("the Poisson fast path needs a one-state model with q = 1")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    v = np.asarray(base.tail(t_arr), dtype=float)
    if mixture.eps == 0:
        return v if np.ndim(t) else float(v[0])
    mp, mh = mixture.ph.mean, mixture.heavy.mean
    vv = base.dist.me + base.dist.me
    light = (vv + mixture.ph.excess()).tail(t_arr)
    heavy = heavy_sum_tail(vv, mixture.heavy, t_arr)
    corr = lam / (1.0 - lam * mp) * ((mp - mh) * v + mh * heavy - mp * light)
    out = v + mixture.eps * corr
    return out if np.ndim(t) else float(out[0])


# -- decomposition into probabilistic terms ------------------------------------------

LITERAL_FAMILIES = ("alpha", "alpha_j", "delta_i", "beta", "beta_j", "gamma", "gamma_j",
                    "eta_i", "theta_i")
AUGMENTED_FAMILIES = LITERAL_FAMILIES + ("zeta_j",)


@dataclass(frozen=True)
class CorrectionDecomposition:
    """Coefficients of ``u.e * corr(t)`` in the basis of probabilistic terms.

    Families (``V``, ``V'`` independent copies of the base workload,
    ``E_r`` exponential with rate ``r``, ``P_e``/``H_e`` excess laws):

    * ``alpha``: ``P(V > t)``; ``alpha_j``: ``P(V + E_{y_j} > t)``;
    * ``delta_i``: ``P(t < V < t + E_{s_i})``;
    * ``beta``/``beta_j``/``gamma``/``gamma_j``: ``mp P(Y + P_e > t) - mh P(Y + H_e > t)``
      for ``Y`` = ``V``, ``V + E_{y_j}``, ``V + V'``, ``V + V' + E_{y_j}``;
    * ``eta_i``/``theta_i``: ``mh P(t < Y + H_e < t + E_{s_i}) - mp P(t < Y + P_e < t + E_{s_i})``
      for ``Y`` = ``V`` and ``V + V'``;
    * ``zeta_j`` (augmented basis only): the ``beta`` form with ``Y = E_{y_j}``.

    Attributes:
        coeffs: family name to coefficient array (complex for conjugate-pair members).
        residual: relative reconstruction error at independent check points.
        fit_residual: relative least-squares residual at the fitting points.
        rank: number of linearly independent basis columns used.
        cond: condition number of the column-scaled matrix of the used columns.
        augmented: whether ``zeta_j`` was needed.
        prefactor: ``1 / (u.e)``.
    """

    coeffs: dict
    residual: float
    fit_residual: float
    rank: int
    n_columns: int
    cond: float
    augmented: bool
    prefactor: float
    y: np.ndarray
    roots: np.ndarray

    def real_after_pairing(self) -> float:
        """Largest imaginary part left after summing conjugate-pair coefficients."""
        worst = 0.0
        for name, vals in self.coeffs.items():
            worst = max(worst, abs(np.sum(vals).imag))
        return worst


def _sample_points(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    half = rng.uniform(0.2, 5.0, n) + 1j * rng.uniform(0.1, 5.0, n)
    return np.concatenate((half, half.conj()))


class _Basis:
    """Transforms of the basis terms, each split as ``T0 + T1 * h``."""

    def __init__(self, base: BaseSolution, mixture: MixtureService, augmented: bool):
        self.w = base.wlst
        self.bp = mixture.ph
        self.h = mixture.heavy
        self.mp, self.mh = mixture.ph.mean, mixture.heavy.mean
        self.y = base.transform.decay_rates
        self.roots = base.roots[1:]
        fams = AUGMENTED_FAMILIES if augmented else LITERAL_FAMILIES
        size = {"alpha": 1, "beta": 1, "gamma": 1}
        self.columns = []
        for name in fams:
            if name.endswith("_j"):
                count = len(self.y)
            elif name.endswith("_i"):
                count = len(self.roots)
            else:
                count = size[name]
            self.columns += [(name, k) for k in range(count)]

    def _block(self, name: str, k: int, s):
        w = self.w(s)
        if name in ("beta", "eta_i"):
            return w
        if name in ("gamma", "theta_i"):
            return w * w
        y = self.y[k]
        if name == "beta_j":
            return w * y / (s + y)
        if name == "gamma_j":
            return w * w * y / (s + y)
        return y / (s + y)  # zeta_j

    def term(self, name: str, k: int, s):
        w = self.w(s)
        zero = np.zeros_like(s)
        if name == "alpha":
            return (1.0 - w) / s, zero
        if name == "alpha_j":
            y = self.y[k]
            return (1.0 - w * y / (s + y)) / s, zero
        if name == "delta_i":
            r = self.roots[k]
            return (w - self.w(r)) / (r - s), zero
        bp = self.bp(s)
        f = self._block(name, k, s)
        if name in ("eta_i", "theta_i"):
            r = self.roots[k]
            fr = self._block(name, k, r)
            dr = self.h.lst(r) - self.bp(r)
            return (-f * bp / s - fr * dr / r) / (r - s), (f / s) / (r - s)
        return (self.mp - self.mh) / s + f * bp / s**2, -f / s**2

    def matrices(self, s):
        T0 = np.column_stack([self.term(n, k, s)[0] for n, k in self.columns])
        T1 = np.column_stack([self.term(n, k, s)[1] for n, k in self.columns])
        return T0, T1


#: families tried first when the basis is linearly dependent
PRIORITY = ("alpha", "gamma", "delta_i", "theta_i", "eta_i", "alpha_j", "gamma_j", "beta",
            "beta_j", "zeta_j")
DEPENDENCE_RTOL = 1e-9


def _independent_columns(A: np.ndarray, order) -> list[int]:
    """Greedy selection of linearly independent columns in the given order."""
    kept: list[int] = []
    for j in order:
        col = A[:, j]
        if kept:
            coef = np.linalg.lstsq(A[:, kept], col, rcond=None)[0]
            resid = np.linalg.norm(col - A[:, kept] @ coef)
        else:
            resid = np.linalg.norm(col)
        if resid > DEPENDENCE_RTOL * max(np.linalg.norm(col), 1e-300):
            kept.append(j)
    return kept


def _pairing(basis: _Basis) -> np.ndarray:
    """Map real parameters to coefficients that are conjugate on conjugate columns."""
    cols = basis.columns
    n = len(cols)
    Tm = np.eye(n, dtype=complex)

    def value(name, k):
        if name.endswith("_i"):
            return basis.roots[k]
        if name.endswith("_j"):
            return basis.y[k]
        return 0.0

    done = set()
    for i, (ni, ki) in enumerate(cols):
        vi = value(ni, ki)
        if i in done or abs(np.imag(vi)) <= 1e-12 * (1 + abs(vi)):
            continue
        for j in range(i + 1, n):
            nj, kj = cols[j]
            if nj == ni and j not in done and abs(value(nj, kj) - np.conj(vi)) <= 1e-9 * (1 + abs(vi)):
                Tm[:, i] = 0
                Tm[:, j] = 0
                Tm[i, i], Tm[j, i] = 0.5, 0.5
                Tm[i, j], Tm[j, j] = -0.5j, 0.5j
                done.update((i, j))
                break
    return Tm


def _fit(basis: _Basis, K: AffineInH, ue: float, pts, check):
    R0 = K.R0
    T0, T1 = basis.matrices(pts)
    A = np.vstack([T0, T1])
    b = np.concatenate([-R0(pts) / pts * ue, -K.R1(pts) / pts * ue])
    Tm = _pairing(basis)
    Ac = A @ Tm
    Ar = np.vstack([Ac.real, Ac.imag])
    br = np.concatenate([b.real, b.imag])
    norms = np.linalg.norm(Ar, axis=0)
    norms[norms == 0] = 1.0
    An = Ar / norms
    order = sorted(range(len(basis.columns)), key=lambda i: PRIORITY.index(basis.columns[i][0]))
    kept = _independent_columns(An, order)
    sub, _, _, sv = np.linalg.lstsq(An[:, kept], br, rcond=None)
    theta = np.zeros(A.shape[1])
    theta[kept] = sub
    x = Tm @ (theta / norms)
    fit_res = float(np.max(np.abs(A @ x - b)) / np.max(np.abs(b)))
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    C0, C1 = basis.matrices(check)
    target = -K(check) / check * ue
    recon = C0 @ x + (C1 @ x) * basis.h.lst(check)
    res = float(np.max(np.abs(recon - target)) / np.max(np.abs(target)))
    return x, res, fit_res, len(kept), cond


def theorem3_decompose(K: AffineInH, base: BaseSolution, mixture: MixtureService,
                       n_fit: int = 25, n_check: int = 25) -> CorrectionDecomposition:
    """Coefficients of the probabilistic-term expansion of the correction.

    The literal basis is tried first; when it cannot reproduce ``K`` the
    ``zeta_j`` family is added. Coefficients come from a least-squares fit
    at ``2 * n_fit`` conjugate-symmetric points and are checked at
    ``n_check`` other points. When the basis is linearly dependent, columns
    are kept in ``PRIORITY`` order and dependent ones get coefficient 0.

    Raises:
        BasisDeficiency: if even the augmented basis leaves a residual above 1e-7.
    """
    ue = float(np.real(base.atom))
    pts = _sample_points(n_fit, 0)
    check = _sample_points(n_check, 1)[:n_check]
    if K.is_zero:
        basis = _Basis(base, mixture, augmented=False)
        coeffs = {name: np.zeros(sum(1 for n, _ in basis.columns if n == name), complex)
                  for name in LITERAL_FAMILIES}
        return CorrectionDecomposition(coeffs, 0.0, 0.0, 0, len(basis.columns), 1.0, False,
                                       1.0 / ue, basis.y, basis.roots)
    for augmented in (False, True):
        basis = _Basis(base, mixture, augmented)
        x, res, fit_res, rank, cond = _fit(basis, K, ue, pts, check)
        if res <= RECONSTRUCTION_TOL:
            break
    if res > BASIS_TOL:
        raise BasisDeficiency(f"basis reproduces the correction only to {res:.2e}")
    names = AUGMENTED_FAMILIES if augmented else LITERAL_FAMILIES
    coeffs = {}
    for name in names:
        idx = [i for i, (n, _) in enumerate(basis.columns) if n == name]
        coeffs[name] = x[idx]
    return CorrectionDecomposition(coeffs, res, fit_res, rank, len(basis.columns), cond,
                                   augmented, 1.0 / ue, basis.y, basis.roots)
