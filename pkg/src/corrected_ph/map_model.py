"""Markovian arrival process and the workload characteristic matrix.

A transition out of state ``i`` happens at rate ``lambda_i``, moves to
``j`` with probability ``P[i, j]`` and brings a real customer with
probability ``q_i`` (otherwise a zero-work dummy). The characteristic
matrix is ``M(s) = Bhat(s) P Lambda + s I - Lambda`` with
``Bhat(s) = b(s) Q + I - Q``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import ConfigInvalid, Reducible, Unstable
from .rational_core import Poly, RationalFn, poly_det_adj, row_polynomial_form


def stationary_dist(P) -> np.ndarray:
    """Left fixed vector of an irreducible stochastic matrix, normalized to sum 1."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if P.shape != (n, n):
        raise ConfigInvalid("transition matrix must be square")
    n_comp, _ = connected_components(P > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise Reducible(f"transition matrix is reducible ({n_comp} communicating classes)")
    A = np.vstack([(P - np.eye(n)).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(pi @ P - pi) > 1e-10:
        raise Reducible("no unique stationary distribution")
    return pi


class LoadInfo(NamedTuple):
    lam_eff: float
    load: float
    margin: float

    @property
    def stable(self) -> bool:
        return self.margin > 0


@dataclass(frozen=True)
class MapModel:
    """Arrival process parameters with derived stationary quantities."""

    rates: np.ndarray
    trans: np.ndarray
    real_prob: np.ndarray
    pi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rates = np.atleast_1d(np.asarray(self.rates, dtype=float))
        trans = np.atleast_2d(np.asarray(self.trans, dtype=float))
        q = np.atleast_1d(np.asarray(self.real_prob, dtype=float))
        n = rates.size
        if trans.shape != (n, n) or q.shape != (n,):
            raise ConfigInvalid("rates, trans and real_prob must describe the same number of states")
        if np.any(rates <= 0):
            raise ConfigInvalid("transition rates must be positive")
        if np.any(trans < 0) or np.any(np.abs(trans.sum(axis=1) - 1.0) > 1e-12):
            raise ConfigInvalid("rows of the transition matrix must be probability vectors")
        if np.any((q < 0) | (q > 1)):
            raise ConfigInvalid("real-customer probabilities must lie in [0, 1]")
        if not np.any(q > 0):
            raise ConfigInvalid("at least one state must generate real customers")
        for name, val in (("rates", rates), ("trans", trans), ("real_prob", q)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "pi", stationary_dist(trans))

    @classmethod
    def poisson(cls, rate: float) -> "MapModel":
        return cls([rate], [[1.0]], [1.0])

    @classmethod
    def erlang_renewal(cls, k: int, rate: float) -> "MapModel":
        """Erlang-k interarrival times as a k-cycle; the last phase brings the customer."""
        P = np.roll(np.eye(k), 1, axis=1)
        q = np.zeros(k)
        q[-1] = 1.0
        return cls(np.full(k, rate), P, q)

    @property
    def n_states(self) -> int:
        return self.rates.size

    @property
    def Lam(self) -> np.ndarray:
        return np.diag(self.rates)

    @property
    def Q(self) -> np.ndarray:
        return np.diag(self.real_prob)

    @property
    def mean_sojourn(self) -> float:
        """``pi Lambda^{-1} e``: mean time between transitions."""
        return float(self.pi @ (1.0 / self.rates))

    @property
    def lam_eff(self) -> float:
        return float(self.pi @ self.real_prob) / self.mean_sojourn

    @property
    def time_weights(self) -> np.ndarray:
        """``Lambda^-1 e / (pi Lambda^-1 e)``.

        The row vector solved for with ``M(s)`` is indexed by transition
        epochs; contracting it with these weights instead of ``e`` gives the
        time-stationary workload. All ones when the rates are equal.
        """
        w = 1.0 / self.rates
        return w / float(self.pi @ w)

    @property
    def perturbation_matrix(self) -> np.ndarray:
        """``Q P Lambda``: derivative of ``M(s)`` per unit change of the service LST."""
        return self.Q @ self.trans @ self.Lam

    def load_and_margin(self, mu: float) -> LoadInfo:
        return load_and_margin(self, mu)

    def check_stable(self, mu: float) -> LoadInfo:
        info = load_and_margin(self, mu)
        if not info.stable:
            raise Unstable(f"unstable model: load {info.load:.6g}, margin {info.margin:.6g}",
                           margin=info.margin)
        return info

    def matrix(self, s, b) -> np.ndarray:
        """Numerical ``M(s)`` given the service transform value ``b = b(s)``.

        ``s`` and ``b`` may be arrays of the same shape; the result then has
        two trailing matrix axes.
        """
        s = np.asarray(s, dtype=complex)
        b = np.asarray(b, dtype=complex)
        q = self.real_prob
        bhat = b[..., None] * q + (1.0 - q)  # diagonal of Bhat(s)
        PL = self.trans * self.rates[None, :]
        n = self.n_states
        return bhat[..., :, None] * PL + s[..., None, None] * np.eye(n) - np.diag(self.rates)


def load_and_margin(m: MapModel, mu: float) -> LoadInfo:
    """Effective arrival rate, load and stability margin ``pi (Lambda^-1 - mu Q) e``."""
    margin = float(m.pi @ (1.0 / m.rates - mu * m.real_prob))
    lam = m.lam_eff
    return LoadInfo(lam, lam * mu, margin)


@dataclass(frozen=True)
class CharMatrix:
    """``M(s)`` with rational entries for a rational service LST.

    ``poly`` and ``row_dens`` give the factored form ``M = diag(1/d) P(s)``;
    ``det_poly`` and ``adj_poly`` are determinant and adjugate of ``P(s)``.
    """

    model: MapModel
    service: RationalFn
    entries: list
    poly: list
    row_dens: list
    det_poly: Poly
    adj_poly: list

    def __call__(self, s) -> np.ndarray:
        return self.model.matrix(s, self.service(s))

    @property
    def det(self) -> RationalFn:
        total = Poly([1.0])
        for d in self.row_dens:
            total = total * d
        return RationalFn(self.det_poly, total)

    def adj_at(self, s: complex) -> np.ndarray:
        """Numerical adjugate of ``M(s)``, valid also where ``M`` is singular."""
        n = self.model.n_states
        dens = np.array([d(s) for d in self.row_dens])
        out = np.empty((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                out[i, j] = self.adj_poly[i][j](s) * np.prod(np.delete(dens, j)) ** -1
        return out

    def det_at(self, s: complex) -> complex:
        return self.det_poly(s) / np.prod([d(s) for d in self.row_dens])


def char_matrix(m: MapModel, service) -> CharMatrix:
    """Assemble ``M(s)`` for a rational service LST (``RationalFn`` or ``RationalLST``)."""
    b = getattr(service, "lst_fn", service)
    s = RationalFn(Poly([0.0, 1.0]), cancel=False)
    n = m.n_states
    PL = m.trans * m.rates[None, :]
    entries = []
    for i in range(n):
        q = m.real_prob[i]
        bhat = b * q + (1.0 - q) if q > 0 else RationalFn.const(1.0)
        row = []
        for j in range(n):
            e = bhat * PL[i, j] if PL[i, j] != 0 else RationalFn.const(0.0)
            if i == j:
                e = e + s - m.rates[i]
            row.append(e)
        entries.append(row)
    poly, dens = row_polynomial_form(entries)
    det_poly, adj_poly = poly_det_adj(poly)
    return CharMatrix(m, b, entries, poly, dens, det_poly, adj_poly)
