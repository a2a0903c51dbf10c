"""Reference workload tail for the full mixture service law.

The right-half-plane determinant roots of ``M_eps(s)`` are found by damped
Newton iteration seeded at the first-order root positions, ``u_eps``
follows from the same linear system as in the unperturbed case, and
``(1 - w_eps(s)) / s`` is inverted numerically.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .base_solver import BaseSolution, null_vector, solve_u
from .corrected import perturb_roots
from .distributions import MixtureService
from .exceptions import NewtonDivergence, RootCountMismatch
from .inversion import InversionSettings, invert
from .map_model import MapModel

DET_TOL = 1e-10
W0_TOL = 1e-8


def adjugate(A: np.ndarray) -> np.ndarray:
    """Cofactor-transpose of a small square matrix (valid when singular)."""
    n = A.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=A.dtype)
    out = np.empty_like(A)
    for i, j in itertools.product(range(n), repeat=2):
        minor = np.delete(np.delete(A, j, axis=0), i, axis=1)
        out[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


def _lst_slope(mixture: MixtureService, s: complex, continuation: bool = False) -> complex:
    h = 1e-6 * (1.0 + abs(s))
    return (mixture.lst(s + h, continuation) - mixture.lst(s - h, continuation)) / (2 * h)


def newton_root(m: MapModel, mixture: MixtureService, seed: complex, max_iter: int = 60) -> complex:
    """Damped Newton iteration for ``det M_eps(s) = 0`` near ``seed``.

    Raises:
        NewtonDivergence: without convergence to ``|det| < 1e-10``.
    """
    def det_and_slope(s):
        Ms = m.matrix(s, mixture.lst(s))
        dM = (_lst_slope(mixture, s) * m.real_prob)[:, None] * m.trans * m.rates[None, :] + np.eye(m.n_states)
        return np.linalg.det(Ms), np.trace(adjugate(Ms) @ dM)

    s = complex(seed)
    f, df = det_and_slope(s)
    for _ in range(max_iter):
        if abs(f) < DET_TOL:
            return s
        if df == 0:
            break
        step = f / df
        lam = 1.0
        while lam > 1e-4:
            cand = s - lam * step
            if cand.real > 0:
                fc, dfc = det_and_slope(cand)
                if abs(fc) < abs(f):
                    break
            lam /= 2
        else:
            break
        s, f, df = cand, fc, dfc
    if abs(f) < DET_TOL:
        return s
    raise NewtonDivergence(f"Newton iteration from {seed:.6g} stalled at |det| = {abs(f):.2e}")


@dataclass(frozen=True)
class ExactMixtureSolution:
    """Roots, boundary vector and transform of the mixture model."""

    model: MapModel
    mixture: MixtureService
    roots: np.ndarray
    a_vecs: np.ndarray
    u: np.ndarray
    cond: float

    def wlst(self, s, continuation: bool = False):
        """``w_eps(s) = s u M_eps(s)^{-1} f`` for an array of ``s`` (``f`` the time weights)."""
        s = np.asarray(s, dtype=complex)
        Ms = self.model.matrix(s, self.mixture.lst(s, continuation))
        f = np.broadcast_to(self.model.time_weights.astype(complex), Ms.shape[:-1])
        x = np.linalg.solve(Ms, f[..., None])[..., 0]
        out = s * (x @ self.u)
        return out if out.ndim else complex(out)

    def wlst_at_zero(self) -> complex:
        """Limit of ``w_eps`` at 0 via the adjugate; equals 1 for a consistent solution."""
        m = self.model
        A = adjugate(m.matrix(0.0, 1.0))
        dM = (-self.mixture.mean * m.real_prob)[:, None] * m.trans * m.rates[None, :] + np.eye(m.n_states)
        return complex(self.u @ A @ m.time_weights / np.trace(A @ dM))

    @property
    def load(self) -> float:
        return self.model.lam_eff * self.mixture.mean

    def tail(self, t, settings: InversionSettings | None = None):
        settings = settings or InversionSettings()
        cont = settings.algorithm == "talbot"
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(t_arr.size)
        pos = t_arr > 0
        out[~pos] = self.load
        if np.any(pos):
            out[pos] = invert(lambda s: (1.0 - self.wlst(s, cont)) / s, t_arr[pos], settings)
        return out if np.ndim(t) else float(out[0])


def solve_mixture(m: MapModel, mixture: MixtureService, base: BaseSolution | None = None) -> ExactMixtureSolution:
    """Solve the mixture model, seeding Newton from first-order root motion when available."""
    m.check_stable(mixture.mean)
    n = m.n_states
    if n == 1:
        roots = np.zeros(1, dtype=complex)
    else:
        if base is None:
            raise ValueError("a base solution is needed to seed the root search")
        seeds = base.roots + mixture.eps * perturb_roots(base, mixture)
        roots = np.concatenate(([0j], [newton_root(m, mixture, z) for z in seeds[1:]]))
        for i, j in itertools.combinations(range(1, n), 2):
            if abs(roots[i] - roots[j]) < 1e-7 * (1 + abs(roots[i])):
                raise RootCountMismatch("two seeds converged to the same root")
    a_vecs = np.array([null_vector(m.matrix(r, mixture.lst(r))) for r in roots[1:]]).reshape(n - 1, n)
    u, cond = solve_u(m, mixture.mean, a_vecs)
    return ExactMixtureSolution(m, mixture, roots, a_vecs, u, cond)


def exact_mixture_tail(m: MapModel, mixture: MixtureService, t, base: BaseSolution | None = None,
                       settings: InversionSettings | None = None):
    """Workload tail of the mixture model on a grid of ``t >= 0``."""
    sol = solve_mixture(m, mixture, base)
    w0 = sol.wlst_at_zero()
    if abs(w0 - 1.0) > W0_TOL:
        warnings.warn(f"mixture transform at 0 is {w0:.10g}", RuntimeWarning, stacklevel=2)
    vals = sol.tail(t, settings)
    arr = np.atleast_1d(vals)
    if np.any(np.diff(arr[np.argsort(np.atleast_1d(t))]) > 1e-9):
        warnings.warn("exact tail is not nonincreasing on the grid", RuntimeWarning, stacklevel=2)
    return vals
