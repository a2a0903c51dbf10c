"""Estimator-style front end following scikit-learn conventions.

``fit`` solves the queue (there is no training data: ``X`` is ignored) and
``predict`` maps an array of times to corrected workload tail values.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .base_solver import solve_base
from .corrected import correction_transform, corrected_tail, theorem3_decompose
from .distributions import HeavyComponent, MixtureService, RationalLST
from .inversion import InversionSettings
from .map_model import MapModel
from .oracle import solve_mixture


def check_times(t) -> np.ndarray:
    """Validate an array-like of nonnegative, finite times; returns a 1-D float array."""
    arr = check_array(np.asarray(t, dtype=float).reshape(-1, 1), ensure_2d=True, dtype=float)
    arr = arr.ravel()
    if np.any(arr < 0):
        raise ValueError("times must be nonnegative")
    return arr


class CorrectedPHWorkload(BaseEstimator):
    """Workload tail of a MAP/G/1 queue with mixture service.

    Args:
        rates: transition rates of the arrival process.
        trans: transition probability matrix.
        real_prob: per-state probability that a transition brings a customer.
        ph: phase-type part of the service law.
        heavy: heavy-tailed part of the service law.
        eps: weight of the heavy part.
        decompose: also extract basis coefficients during ``fit``.
        inversion: ``"euler"`` or ``"talbot"`` for :meth:`predict_exact`.
        terms: inversion terms (algorithm default when ``None``).

    Example:
        >>> est = CorrectedPHWorkload([5, 5], [[0, 1], [1, 0]], [0, 1],
        ...                           RationalLST.exponential(3),
        ...                           HeavyComponent.aw_sqrt(2.0), eps=0.01)
        >>> float(round(est.fit().predict([0.0])[0], 4))
        0.8375
    """

    def __init__(self, rates=None, trans=None, real_prob=None, ph: RationalLST | None = None,
                 heavy: HeavyComponent | None = None, eps: float = 0.0, decompose: bool = False,
                 inversion: str = "euler", terms: int | None = None):
        self.rates = rates
        self.trans = trans
        self.real_prob = real_prob
        self.ph = ph
        self.heavy = heavy
        self.eps = eps
        self.decompose = decompose
        self.inversion = inversion
        self.terms = terms

    def fit(self, X=None, y=None):
        if self.ph is None or self.heavy is None:
            raise ValueError("both ph and heavy service parts are required")
        self.model_ = MapModel(self.rates, self.trans, self.real_prob)
        self.mixture_ = MixtureService(float(self.eps), self.ph, self.heavy)
        self.model_.check_stable(self.mixture_.mean)
        self.base_ = solve_base(self.model_, self.ph)
        self.correction_ = correction_transform(self.base_, self.mixture_) if self.eps > 0 else None
        self.decomposition_ = (theorem3_decompose(self.correction_, self.base_, self.mixture_)
                               if self.decompose and self.correction_ is not None else None)
        self.tail_ = corrected_tail(self.base_, self.mixture_, K=self.correction_)
        self.load_ = self.model_.lam_eff * self.mixture_.mean
        self._exact = None
        return self

    def predict(self, X) -> np.ndarray:
        """Corrected approximation of ``P(V > t)``."""
        check_is_fitted(self, "tail_")
        return np.atleast_1d(self.tail_(check_times(X)))

    def predict_ph(self, X) -> np.ndarray:
        """Tail with the heavy part ignored (plain phase-type service)."""
        check_is_fitted(self, "base_")
        return np.atleast_1d(self.base_.tail(check_times(X)))

    def predict_exact(self, X) -> np.ndarray:
        """Reference tail of the mixture model by numerical inversion."""
        check_is_fitted(self, "base_")
        if self._exact is None:
            self._exact = solve_mixture(self.model_, self.mixture_, self.base_)
        settings = InversionSettings(self.inversion, self.terms)
        return np.atleast_1d(self._exact.tail(check_times(X), settings))
