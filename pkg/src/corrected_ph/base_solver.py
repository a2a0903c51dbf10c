"""Workload of the MAP/PH/1 queue (the unperturbed model).

Pipeline: right-half-plane roots of ``det M(s)``, null vectors ``a_i``,
the boundary vector ``u``, the total-workload LST
``w(s) = s u adj(M(s)) e / det M(s)`` in reduced rational form, and its
analytic inversion to ``P(V > t)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import MatrixExpDist, RationalLST
from .exceptions import (CancellationFailure, MultipleRoot, NullspaceDim,
                         RootCountMismatch, SingularSystem)
from .map_model import CharMatrix, MapModel, char_matrix
from .rational_core import Poly, RationalFn, poly_roots

RHP_TOL = 1e-9
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class WorkloadTransform:
    """Output of the transform stage.

    Attributes:
        u: boundary row vector.
        roots: determinant roots in the closed right half-plane, ``roots[0] == 0``.
        a_vecs: null vectors for ``roots[1:]``, one per row.
        wlst: reduced total-workload LST.
        num_roots: zeros of ``wlst`` (the ``-rho_j``).
        den_roots: poles of ``wlst`` (the ``-y_j``).
        per_state: per-state transforms ``E[exp(-sV); J = i]``.
        cond: condition number of the linear system for ``u``.
        weights: time-stationary weights of the states (``MapModel.time_weights``).
    """

    u: np.ndarray
    roots: np.ndarray
    a_vecs: np.ndarray
    wlst: RationalFn
    num_roots: np.ndarray
    den_roots: np.ndarray
    per_state: list
    cond: float
    weights: np.ndarray

    @property
    def atom(self) -> complex:
        return complex(self.u @ self.weights)

    @property
    def decay_rates(self) -> np.ndarray:
        """The ``y_j``: ``P(V > t)`` is a combination of ``exp(-y_j t)``."""
        return -self.den_roots


@dataclass(frozen=True)
class WorkloadDist:
    me: MatrixExpDist

    def tail(self, t):
        return self.me.tail(t)


def find_rhp_roots(cm: CharMatrix) -> np.ndarray:
    """The N roots of ``det M(s) = 0`` with ``Re(s) >= 0``; the first is 0.

    Raises:
        RootCountMismatch: if the count differs from N.
        MultipleRoot: if two of them cluster.
    """
    n = cm.model.n_states
    p = cm.det_poly
    if abs(p.coeffs[0]) > 1e-9 * p.scale_at(1.0):
        raise RootCountMismatch("determinant does not vanish at s = 0")
    if n == 1:
        return np.zeros(1, dtype=complex)
    # drop the known factor s before searching
    q = Poly(p.coeffs[1:], trim_rtol=0.0)
    rs = poly_roots(q)
    keep = rs.values.real > RHP_TOL * (1.0 + np.abs(rs.values))
    edge = np.abs(rs.values.real) <= RHP_TOL * (1.0 + np.abs(rs.values))
    if np.any(edge):
        raise RootCountMismatch("determinant root on the imaginary axis; model at the stability boundary?")
    found = rs.values[keep]
    if found.size != n - 1:
        raise RootCountMismatch(f"expected {n - 1} roots with Re(s) > 0, found {found.size}")
    if np.any(rs.multiplicity[keep] > 1):
        raise MultipleRoot("repeated right-half-plane determinant root")
    order = np.lexsort((found.imag, found.real))
    return np.concatenate(([0j], found[order]))


def null_vector(Ms: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Right null vector from the smallest singular direction, largest entry scaled to 1."""
    _, sv, vh = np.linalg.svd(Ms)
    n = Ms.shape[0]
    if n > 1 and sv[-2] <= 1e-8 * max(sv[0], scale):
        raise NullspaceDim("null space has dimension > 1")
    a = vh[-1].conj()
    a = a / a[np.argmax(np.abs(a))]
    if np.linalg.norm(Ms @ a) > RESIDUAL_TOL * max(sv[0], 1.0):
        raise NullspaceDim("matrix is not singular at the root")
    return a


def solve_a_vectors(cm: CharMatrix, roots) -> np.ndarray:
    n = cm.model.n_states
    out = np.zeros((len(roots) - 1, n), dtype=complex)
    for k, r in enumerate(roots[1:]):
        out[k] = null_vector(cm(r))
    return out


def u_system(m: MapModel, a_vecs) -> np.ndarray:
    """Columns ``[Lambda^-1 e, a_2, ..., a_N]``; ``u`` solves ``u @ A = rhs``."""
    cols = [1.0 / m.rates] + list(a_vecs)
    return np.column_stack(cols).astype(complex)


def solve_u(m: MapModel, mu: float, a_vecs) -> tuple[np.ndarray, float]:
    """Boundary vector ``u`` and the condition number of its linear system."""
    A = u_system(m, a_vecs)
    rhs = np.zeros(m.n_states, dtype=complex)
    rhs[0] = m.pi @ (1.0 / m.rates - mu * m.real_prob)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > 1e13:
        raise SingularSystem(f"u system is singular (cond {cond:.2e})")
    return np.linalg.solve(A.T, rhs), cond


def _uadj_numerator(cm: CharMatrix, u) -> list[Poly]:
    """Polynomials ``sum_i u_i adjP_ij d_j`` for each column ``j``."""
    n = cm.model.n_states
    out = []
    for j in range(n):
        acc = Poly([0.0])
        for i in range(n):
            acc = acc + cm.adj_poly[i][j] * complex(u[i])
        out.append(acc * cm.row_dens[j])
    return out


def det_roots(cm: CharMatrix, rhp_roots) -> np.ndarray:
    """All roots of the determinant polynomial, with the known RHP ones exact."""
    p = cm.det_poly
    for r in rhp_roots:
        p = p.deflate(r)
    rest = poly_roots(p).values if p.degree >= 1 else np.zeros(0, complex)
    return np.concatenate((np.asarray(rhp_roots, complex), rest))


def reduce_over_det(num: Poly, cm: CharMatrix, all_roots, power: int = 1, known=()) -> RationalFn:
    """``num / det_poly**power`` with common roots cancelled.

    ``known`` lists denominator roots that must cancel; a failure raises
    :class:`CancellationFailure`.
    """
    poles = list(all_roots) * power
    f = RationalFn.from_known_poles(num, poles, cm.det_poly.lead ** power)
    if len(known):
        left = f.den.roots() if f.den.degree else np.zeros(0)
        for r in known:
            if np.any(np.abs(left - r) < 1e-7 * (1 + abs(r))):
                raise CancellationFailure(f"pole at {r:.6g} did not cancel")
    return f


def workload_lst(m: MapModel, cm: CharMatrix, u, roots=None, a_vecs=None, cond=np.nan) -> WorkloadTransform:
    """Reduced total-workload LST and its factored form."""
    if roots is None:
        roots = find_rhp_roots(cm)
    allr = det_roots(cm, roots)
    f = m.time_weights
    cols = [c * complex(fj) for c, fj in zip(_uadj_numerator(cm, u), f)]
    s = Poly([0.0, 1.0])
    total = Poly([0.0])
    for c in cols:
        total = total + c
    wlst = reduce_over_det(s * total, cm, allr, known=roots)
    bad = wlst.poles()
    if bad.size and np.any(bad.real >= -RHP_TOL):
        raise CancellationFailure("workload transform has a pole in the closed right half-plane")
    per_state = [reduce_over_det(s * c, cm, allr) for c in cols]
    return WorkloadTransform(
        u=np.asarray(u, complex),
        roots=np.asarray(roots, complex),
        a_vecs=np.zeros((0, m.n_states), complex) if a_vecs is None else np.asarray(a_vecs),
        wlst=wlst,
        num_roots=wlst.zeros(),
        den_roots=wlst.poles(),
        per_state=per_state,
        cond=cond,
        weights=f,
    )


def invert_workload(wt: WorkloadTransform) -> WorkloadDist:
    """``P(V > t) = sum c_j exp(-y_j t)`` from the partial fractions of the LST."""
    return WorkloadDist(MatrixExpDist.from_lst(wt.wlst))


@dataclass(frozen=True)
class BaseSolution:
    """Everything the perturbation layer needs about the unperturbed model."""

    model: MapModel
    service: RationalLST
    cm: CharMatrix
    transform: WorkloadTransform
    dist: WorkloadDist
    det_all_roots: np.ndarray

    @property
    def u(self):
        return self.transform.u

    @property
    def roots(self):
        return self.transform.roots

    @property
    def a_vecs(self):
        return self.transform.a_vecs

    @property
    def wlst(self) -> RationalFn:
        return self.transform.wlst

    @property
    def atom(self) -> complex:
        return self.transform.atom

    def tail(self, t):
        return self.dist.tail(t)


def solve_base(m: MapModel, service: RationalLST) -> BaseSolution:
    """Run the whole unperturbed pipeline."""
    mu = service.mean
    m.check_stable(mu)
    cm = char_matrix(m, service)
    roots = find_rhp_roots(cm)
    a_vecs = solve_a_vectors(cm, roots)
    u, cond = solve_u(m, mu, a_vecs)
    wt = workload_lst(m, cm, u, roots, a_vecs, cond)
    dist = invert_workload(wt)
    return BaseSolution(m, service, cm, wt, dist, det_roots(cm, roots))
