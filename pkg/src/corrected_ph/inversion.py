"""Numerical Laplace inversion: Euler summation and the fixed Talbot contour.

Both routines take a transform ``f(s)`` that accepts and returns complex
numpy arrays of any shape, and invert it at one or more positive times.
They are independent algorithms and are used to check each other.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

from .exceptions import InversionFailure

EULER_A = 18.4
AGREEMENT_TOL = 1e-6


@dataclass(frozen=True)
class InversionSettings:
    """Parameters for :func:`invert`.

    ``terms`` is ``M`` in both algorithms: Euler sums ``2M + 1`` series
    terms and averages the last ``M + 1`` partial sums binomially; Talbot
    uses ``M`` contour nodes. ``None`` selects the algorithm default.
    """

    algorithm: str = "euler"
    terms: int | None = None
    target_abs_tol: float = 1e-8

    def __post_init__(self):
        if self.algorithm not in ("euler", "talbot"):
            raise ValueError(f"unknown inversion algorithm {self.algorithm!r}")
        if self.terms is not None and self.terms < 10:
            raise ValueError("at least 10 terms are required")

    @property
    def n_terms(self) -> int:
        if self.terms is not None:
            return self.terms
        return 25 if self.algorithm == "euler" else 48


def _as_times(t) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0):
        raise ValueError("numerical inversion needs t > 0")
    return arr, scalar


def _finish(values: np.ndarray, scalar: bool):
    if not np.all(np.isfinite(values)):
        raise InversionFailure("inversion produced non-finite values")
    return float(values[0]) if scalar else values


def euler_weights(m: int) -> np.ndarray:
    """Weights ``eta_k``, k = 0..2m, folding the binomial averaging into the sum."""
    eta = np.ones(2 * m + 1)
    eta[0] = 0.5
    tail = np.cumsum([comb(m, j) for j in range(m, -1, -1)])[::-1] / 2.0**m
    # eta_{m+j} = sum_{i >= j} C(m, i) / 2^m for j = 1..m
    eta[m + 1:] = tail[1:]
    return eta


def euler(f, t, m: int = 25, a: float = EULER_A):
    """Abate-Whitt Euler algorithm on the Bromwich line ``Re(s) = a / (2t)``."""
    t, scalar = _as_times(t)
    k = np.arange(2 * m + 1)
    eta = euler_weights(m) * (-1.0) ** k
    s = (a + 2j * np.pi * k[None, :]) / (2.0 * t[:, None])
    vals = np.real(np.asarray(f(s), dtype=complex))
    out = np.exp(a / 2.0) / t * (vals @ eta)
    return _finish(out, scalar)


def talbot(f, t, m: int = 48):
    """Fixed Talbot method (Abate-Valko parameterization ``r = 2M / (5t)``)."""
    t, scalar = _as_times(t)
    theta = np.arange(1, m) * np.pi / m
    cot = 1.0 / np.tan(theta)
    sigma = theta + (theta * cot - 1.0) * cot
    r = 2.0 * m / (5.0 * t)
    s = r[:, None] * theta[None, :] * (cot[None, :] + 1j)
    s = np.concatenate((r[:, None].astype(complex), s), axis=1)
    vals = np.asarray(f(s), dtype=complex)
    w = np.concatenate(([0.5 + 0j], 1.0 + 1j * sigma))
    terms = np.exp(t[:, None] * s) * vals * w[None, :]
    out = r / m * np.real(terms.sum(axis=1))
    return _finish(out, scalar)


def invert(f, t, settings: InversionSettings | None = None):
    settings = settings or InversionSettings()
    if settings.algorithm == "euler":
        return euler(f, t, settings.n_terms)
    return talbot(f, t, settings.n_terms)


def dual_invert(f, t, tol: float = AGREEMENT_TOL, warn: bool = True):
    """Invert with both algorithms; returns ``(euler, talbot, max_abs_diff)``.

    A warning is issued when the two disagree by more than ``tol``.
    """
    e = np.atleast_1d(euler(f, t))
    tb = np.atleast_1d(talbot(f, t))
    diff = float(np.max(np.abs(e - tb)))
    if warn and diff > tol:
        warnings.warn(f"Euler and Talbot inversions differ by {diff:.2e}", RuntimeWarning, stacklevel=2)
    return e, tb, diff
