"""Service-time building blocks.

``MatrixExpDist`` is the workhorse: an atom at zero plus a density that is
a finite sum of ``c * t**k * exp(-a t) / k!`` terms (complex ``a`` allowed,
in conjugate pairs). Its Laplace transform is ``atom + sum c / (s + a)**(k+1)``
so convolution, excess distributions and tails stay in closed form.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb, factorial

import mpmath
import numpy as np
from scipy.interpolate import PchipInterpolator

from .exceptions import BranchViolation, ConfigInvalid
from .inversion import AGREEMENT_TOL, euler, talbot
from .rational_core import Poly, RationalFn, partial_fractions, same_root

_MERGE_RTOL = 1e-10


def _phi(t: np.ndarray, rates, coeffs, powers) -> np.ndarray:
    """Evaluate ``sum c t^k e^{-a t} / k!`` for an array of ``t``."""
    t = np.asarray(t, dtype=float)
    if len(rates) == 0:
        return np.zeros(t.shape, dtype=complex)
    tt = t[..., None]
    fact = np.array([factorial(int(k)) for k in powers], dtype=float)
    return np.sum(coeffs * tt ** powers * np.exp(-rates * tt) / fact, axis=-1)


def _merge(rates, coeffs, powers):
    out: list[list] = []
    for a, c, k in zip(rates, coeffs, powers):
        for item in out:
            if item[2] == k and same_root(item[0], a, _MERGE_RTOL):
                item[1] += c
                break
        else:
            out.append([complex(a), complex(c), int(k)])
    out = [o for o in out if o[1] != 0]
    if not out:
        return np.zeros(0, complex), np.zeros(0, complex), np.zeros(0, int)
    r, c, k = zip(*out)
    return np.array(r, complex), np.array(c, complex), np.array(k, int)


def _pair_expansion(a: complex, m: int, b: complex, n: int):
    """Partial fractions of ``1 / ((s+a)^m (s+b)^n)`` for ``a != b``.

    Returns a list of ``(rate, coeff, power)`` with ``power = order - 1``.
    """
    d = b - a
    out = []
    for i in range(1, m + 1):
        out.append((a, (-1) ** (m - i) * comb(m + n - i - 1, n - 1) / d ** (m + n - i), i - 1))
    for j in range(1, n + 1):
        out.append((b, (-1) ** (n - j) * comb(m + n - j - 1, m - 1) / (-d) ** (m + n - j), j - 1))
    return out


@dataclass(frozen=True)
class MatrixExpDist:
    """Atom at zero plus an exponential-polynomial density.

    Attributes:
        atom0: probability mass at zero.
        rates, coeffs, powers: density terms ``coeffs * t**powers * exp(-rates t) / powers!``.
    """

    atom0: complex = 0.0
    rates: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    powers: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    def __post_init__(self):
        r, c, k = _merge(np.asarray(self.rates, complex), np.asarray(self.coeffs, complex),
                         np.asarray(self.powers, int))
        if np.any(r.real <= 0):
            raise ValueError("all rates must have positive real part")
        object.__setattr__(self, "rates", r)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "powers", k)
        object.__setattr__(self, "atom0", complex(self.atom0))

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls) -> "MatrixExpDist":
        """The point mass at zero."""
        return cls(atom0=1.0)

    @classmethod
    def exponential(cls, rate: complex) -> "MatrixExpDist":
        return cls(0.0, [rate], [rate], [0])

    @classmethod
    def from_lst(cls, f: RationalFn) -> "MatrixExpDist":
        """Invert a proper rational LST with simple poles."""
        pf = partial_fractions(f)
        return cls(pf.constant, [-p for p, _, _ in pf.terms], [r for _, r, _ in pf.terms],
                   [0] * len(pf.terms))

    # -- transforms and moments --------------------------------------------
    def lst(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.atom0, dtype=complex)
        for a, c, k in zip(self.rates, self.coeffs, self.powers):
            out = out + c / (s + a) ** (k + 1)
        return out if out.ndim else complex(out)

    @property
    def mean(self) -> float:
        return float(np.real(np.sum(self.coeffs * (self.powers + 1) / self.rates ** (self.powers + 2))))

    @property
    def mass(self) -> complex:
        return self.atom0 + np.sum(self.coeffs / self.rates ** (self.powers + 1))

    def density(self, t):
        return np.real(_phi(t, self.rates, self.coeffs, self.powers))

    def _shifted_tail_terms(self, shift: complex = 0.0):
        """Terms of ``int_t^inf f(y) e^{-shift (y - t)} dy`` as an exp-polynomial in ``t``."""
        rates, coeffs, powers = [], [], []
        for a, c, k in zip(self.rates, self.coeffs, self.powers):
            for l in range(k + 1):
                rates.append(a)
                coeffs.append(c / (a + shift) ** (k - l + 1))
                powers.append(l)
        return np.array(rates, complex), np.array(coeffs, complex), np.array(powers, int)

    def tail_terms(self) -> list[tuple[complex, complex, int]]:
        """``P(X > t) = sum w * t**p * exp(-rate t)`` as ``(rate, w, p)`` triples."""
        r, c, k = self._shifted_tail_terms()
        return [(a, w / factorial(p), p) for a, w, p in zip(r, c, k)]

    def tail(self, t, complex_ok: bool = False):
        """``P(X > t)`` for ``t >= 0``."""
        val = _phi(t, *self._shifted_tail_terms())
        if complex_ok:
            return val if np.ndim(val) else complex(val)
        val = np.real(val)
        return val if np.ndim(val) else float(val)

    def interval(self, t, rho: complex):
        """``P(t < X < t + E)`` with ``E ~ Exp(rho)`` independent of ``X``.

        For ``t < 0`` this equals ``exp(rho t) * lst(rho)``. Complex ``rho``
        is allowed and gives the analytic continuation.
        """
        t = np.asarray(t, dtype=float)
        pos = _phi(np.maximum(t, 0.0), *self._shifted_tail_terms(rho))
        neg = np.exp(rho * np.minimum(t, 0.0)) * self.lst(rho)
        out = np.where(t >= 0, pos, neg)
        return out if out.ndim else complex(out)

    # -- algebra -------------------------------------------------------------
    def convolve(self, other: "MatrixExpDist") -> "MatrixExpDist":
        """Distribution of the sum of independent copies."""
        rates, coeffs, powers = [], [], []

        def add(a, c, k):
            rates.append(a)
            coeffs.append(c)
            powers.append(k)

        for a, c, k in zip(self.rates, self.coeffs, self.powers):
            add(a, c * other.atom0, k)
        for b, d, l in zip(other.rates, other.coeffs, other.powers):
            add(b, d * self.atom0, l)
        for a, c, k in zip(self.rates, self.coeffs, self.powers):
            for b, d, l in zip(other.rates, other.coeffs, other.powers):
                if same_root(a, b, _MERGE_RTOL):
                    add(a, c * d, k + l + 1)
                else:
                    for r, w, p in _pair_expansion(a, k + 1, b, l + 1):
                        add(r, c * d * w, p)
        return MatrixExpDist(self.atom0 * other.atom0, rates, coeffs, powers)

    def __add__(self, other: "MatrixExpDist") -> "MatrixExpDist":
        return self.convolve(other)

    def plus_exponential(self, rate: complex) -> "MatrixExpDist":
        return self.convolve(MatrixExpDist.exponential(rate))

    def excess(self) -> "MatrixExpDist":
        """Stationary excess distribution, density ``P(X > t) / E[X]``."""
        r, c, k = self._shifted_tail_terms()
        return MatrixExpDist(0.0, r, c / self.mean, k)

    def scaled(self, factor: complex) -> "MatrixExpDist":
        """Multiply the measure by ``factor`` (not a distribution afterwards)."""
        return MatrixExpDist(self.atom0 * factor, self.rates, self.coeffs * factor, self.powers)

    def imag_residue(self, grid) -> float:
        """Largest imaginary part of the tail on ``grid``."""
        return float(np.max(np.abs(np.imag(self.tail(grid, complex_ok=True)))))


# -- rational-LST (phase-type style) distributions -----------------------------


@dataclass(frozen=True)
class RationalLST:
    """A distribution on [0, inf) with rational LST.

    ``me`` is the same law in time-domain form; constructors build it
    directly so that repeated poles (Erlang) never go through root finding.
    """

    lst_fn: RationalFn
    me: MatrixExpDist
    name: str = "rational"

    def __post_init__(self):
        if not self.lst_fn.is_proper:
            raise ConfigInvalid("service LST must be proper")
        if abs(self.lst_fn(0.0) - 1.0) > 1e-9:
            raise ConfigInvalid(f"service LST at 0 is {self.lst_fn(0.0):.6g}, not 1")
        if not self.mean > 0:
            raise ConfigInvalid("service mean must be positive")

    @classmethod
    def exponential(cls, rate: float) -> "RationalLST":
        if rate <= 0:
            raise ConfigInvalid("exponential rate must be positive")
        return cls(RationalFn(Poly([rate]), Poly([rate, 1.0])), MatrixExpDist.exponential(rate),
                   f"Exp({rate:g})")

    @classmethod
    def erlang(cls, k: int, rate: float) -> "RationalLST":
        if k < 1 or rate <= 0:
            raise ConfigInvalid("Erlang needs k >= 1 and a positive rate")
        fn = RationalFn(Poly([rate**k]), Poly([rate, 1.0]) ** k, cancel=False)
        return cls(fn, MatrixExpDist(0.0, [rate], [rate**k], [k - 1]), f"Erlang({k},{rate:g})")

    @classmethod
    def hyperexp(cls, probs, rates) -> "RationalLST":
        probs = np.asarray(probs, float)
        rates = np.asarray(rates, float)
        if probs.shape != rates.shape or np.any(probs < 0) or abs(probs.sum() - 1) > 1e-12:
            raise ConfigInvalid("hyperexponential probabilities must be nonnegative and sum to 1")
        if np.any(rates <= 0):
            raise ConfigInvalid("hyperexponential rates must be positive")
        fn = RationalFn.const(0.0)
        for p, r in zip(probs, rates):
            fn = fn + RationalFn(Poly([p * r]), Poly([r, 1.0]))
        return cls(fn, MatrixExpDist(0.0, rates, probs * rates, [0] * len(rates)), "HyperExp")

    @classmethod
    def from_coeffs(cls, num, den) -> "RationalLST":
        """General rational LST from ascending coefficient lists (simple poles only)."""
        fn = RationalFn(Poly(num), Poly(den))
        return cls(fn, MatrixExpDist.from_lst(fn), "rational")

    def __call__(self, s):
        return self.lst_fn(s)

    @property
    def mean(self) -> float:
        return float(np.real(-self.lst_fn.deriv()(0.0)))

    def excess_lst(self, s):
        return excess_lst(self, s)

    def excess(self) -> MatrixExpDist:
        return self.me.excess()

    def tail(self, t):
        return self.me.tail(t)


# -- heavy-tailed components ---------------------------------------------------


def _sqrt_principal(s):
    return np.sqrt(np.asarray(s, dtype=complex))


class HeavyComponent:
    """Heavy-tailed part of the service mixture.

    Use the ``pareto``, ``aw_sqrt``, ``table`` or ``from_rational``
    constructors. Tail evaluators are built eagerly, so instances are
    immutable and safe to share.
    """

    #: log-spaced cache for numerically inverted tails
    GRID_POINTS = 400
    GRID_MIN = 1e-4

    def __init__(self, kind: str, params: dict, mean: float, lst, tail, excess_tail,
                 branch_cut: bool = False, breakpoints=()):
        self.kind = kind
        self.params = dict(params)
        self.mean = float(mean)
        self._lst = lst
        self._tail = tail
        self._excess_tail = excess_tail
        self.branch_cut = branch_cut
        self.breakpoints = tuple(breakpoints)

    def __repr__(self):
        return f"HeavyComponent(kind={self.kind!r}, params={self.params})"

    def lst(self, s, continuation: bool = False):
        """Transform value; ``continuation=True`` allows the cut plane ``Re(s) < 0``."""
        s_arr = np.asarray(s, dtype=complex)
        if not continuation and np.any(s_arr.real < -1e-14):
            raise BranchViolation(f"{self.kind} LST requested at Re(s) < 0")
        out = self._lst(s_arr)
        return out if np.ndim(out) else complex(out)

    __call__ = lst

    def excess_lst(self, s, continuation: bool = False):
        s = np.asarray(s, dtype=complex)
        small = np.abs(s) < 1e-300
        safe = np.where(small, 1.0, s)
        out = np.where(small, 1.0, (1.0 - self.lst(safe, continuation)) / (self.mean * safe))
        return out if out.ndim else complex(out)

    def tail(self, x):
        return self._tail(x)

    def excess_tail(self, x):
        return self._excess_tail(x)

    # -- constructors ----------------------------------------------------
    @classmethod
    def pareto(cls, shape: float, scale: float) -> "HeavyComponent":
        """Pareto law ``P(H > x) = (scale / x)**shape`` for ``x >= scale``."""
        if shape <= 1 or scale <= 0:
            raise ConfigInvalid("Pareto needs shape > 1 (finite mean) and scale > 0")
        mean = shape * scale / (shape - 1)

        def lst(s):
            flat = np.atleast_1d(s).ravel()
            vals = np.empty(flat.size, dtype=complex)
            for i, z in enumerate(flat):
                if z == 0:
                    vals[i] = 1.0
                else:
                    vals[i] = complex(shape * mpmath.expint(shape + 1, scale * z))
            return vals.reshape(np.shape(s))

        def tail(x):
            x = np.asarray(x, dtype=float)
            out = np.where(x < scale, 1.0, (scale / np.maximum(x, scale)) ** shape)
            return out if out.ndim else float(out)

        def excess_tail(x):
            x = np.asarray(x, dtype=float)
            xm = np.maximum(x, scale)
            above = scale**shape * xm ** (1 - shape) / (shape - 1)
            below = scale - x + scale / (shape - 1)
            out = np.where(x < scale, below, above) / mean
            return out if out.ndim else float(out)

        return cls("pareto", {"shape": shape, "scale": scale}, mean, lst, tail, excess_tail,
                   branch_cut=True, breakpoints=(scale,))

    @classmethod
    def aw_sqrt(cls, kappa: float, t_max: float = 100.0) -> "HeavyComponent":
        """Heavy-tailed law with LST ``1 - s / ((kappa + sqrt s)(1 + sqrt s))``.

        The mean is ``1 / kappa``. Tails are not available in closed form;
        they are obtained by numerical inversion on a log grid over
        ``[1e-4, 10 * t_max]`` (checked Euler against Talbot) and
        interpolated monotonically.
        """
        if kappa <= 0:
            raise ConfigInvalid("aw_sqrt needs kappa > 0")
        mean = 1.0 / kappa

        def lst(s):
            r = _sqrt_principal(s)
            return 1.0 - s / ((kappa + r) * (1.0 + r))

        def tail_tf(s):
            r = _sqrt_principal(s)
            return 1.0 / ((kappa + r) * (1.0 + r))

        def excess_tf(s):
            r = _sqrt_principal(s)
            return (1.0 - kappa / ((kappa + r) * (1.0 + r))) / s

        tail = _InvertedTail(tail_tf, 10.0 * t_max, sqrt_start=True)
        excess_tail = _InvertedTail(excess_tf, 10.0 * t_max, sqrt_start=False)
        return cls("aw_sqrt", {"kappa": kappa, "t_max": t_max}, mean, lst, tail, excess_tail,
                   branch_cut=True)

    @classmethod
    def table(cls, x, tail_values) -> "HeavyComponent":
        """Piecewise-linear tail through ``(x_k, P(H > x_k))``.

        The table must start at ``(0, 1)``, be nonincreasing, and end at 0.
        """
        x = np.asarray(x, dtype=float)
        g = np.asarray(tail_values, dtype=float)
        if x.ndim != 1 or x.shape != g.shape or x.size < 2:
            raise ConfigInvalid("table needs matching x and tail arrays of length >= 2")
        if x[0] != 0 or g[0] != 1 or g[-1] != 0:
            raise ConfigInvalid("table tail must start at (0, 1) and end at 0")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(g) > 0):
            raise ConfigInvalid("table must have increasing x and nonincreasing tail")
        slopes = np.diff(g) / np.diff(x)
        mean = float(np.sum(0.5 * (g[:-1] + g[1:]) * np.diff(x)))
        # integral of the tail from x_k to infinity
        seg = 0.5 * (g[:-1] + g[1:]) * np.diff(x)
        right = np.concatenate((np.cumsum(seg[::-1])[::-1], [0.0]))

        def lst(s):
            s = np.asarray(s, dtype=complex)
            ss = s[..., None]
            e0 = np.exp(-ss * x[:-1])
            dx = np.diff(x)
            # (e^{-s x0} - e^{-s x1}) / s, with the s -> 0 limit dx
            small = np.abs(ss) < 1e-12
            ratio = np.where(small, dx, e0 * (-np.expm1(-ss * dx)) / np.where(small, 1.0, ss))
            return -np.sum(slopes * ratio, axis=-1)

        def tail(t):
            t = np.asarray(t, dtype=float)
            out = np.interp(t, x, g, right=0.0)
            return out if out.ndim else float(out)

        def excess_tail(t):
            t = np.asarray(t, dtype=float)
            k = np.clip(np.searchsorted(x, t, side="right") - 1, 0, x.size - 2)
            tc = np.minimum(t, x[-1])
            gt = np.interp(tc, x, g)
            partial = 0.5 * (gt + g[k + 1]) * (x[k + 1] - tc)
            out = np.where(t >= x[-1], 0.0, (partial + right[k + 1]) / mean)
            return out if out.ndim else float(out)

        return cls("table", {"x": x.tolist(), "tail": g.tolist()}, mean, lst, tail, excess_tail,
                   breakpoints=tuple(x[1:-1]))

    @classmethod
    def from_rational(cls, dist: RationalLST) -> "HeavyComponent":
        """Wrap a rational-LST law; used for degenerate (no-heavy-tail) checks."""
        exc = dist.excess()
        return cls("rational", {"name": dist.name}, dist.mean, dist.lst_fn,
                   dist.me.tail, exc.tail)


class _InvertedTail:
    """Tail function from a Laplace transform, cached on a log grid.

    Values inside ``[GRID_MIN, x_max]`` come from a monotone PCHIP fit of
    ``log`` tail against ``log x``; beyond ``x_max`` the transform is
    inverted directly. Near zero the tail is joined to 1 along ``sqrt(x)``
    (for laws with an ``x**-1/2`` density singularity) or linearly.
    """

    def __init__(self, transform, x_max: float, sqrt_start: bool):
        self.transform = transform
        self.x_min = HeavyComponent.GRID_MIN
        self.x_max = max(x_max, 10 * self.x_min)
        self.sqrt_start = sqrt_start
        grid = np.geomspace(self.x_min, self.x_max, HeavyComponent.GRID_POINTS)
        vals = euler(transform, grid)
        probe = grid[:: HeavyComponent.GRID_POINTS // 10]
        self.agreement = float(np.max(np.abs(talbot(transform, probe) - euler(transform, probe))))
        if self.agreement > AGREEMENT_TOL:
            warnings.warn(f"heavy tail inversion: Euler/Talbot differ by {self.agreement:.2e}",
                          RuntimeWarning, stacklevel=3)
        vals = np.minimum.accumulate(np.clip(vals, 0.0, 1.0))
        self.grid, self.values = grid, vals
        if np.all(vals > 0):
            self._fit = PchipInterpolator(np.log(grid), np.log(vals))
            self._log = True
        else:
            self._fit = PchipInterpolator(grid, vals)
            self._log = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty(flat.size)
        lo = flat < self.x_min
        hi = flat > self.x_max
        mid = ~(lo | hi)
        if np.any(mid):
            xm = flat[mid]
            out[mid] = np.exp(self._fit(np.log(xm))) if self._log else self._fit(xm)
        if np.any(lo):
            frac = np.clip(flat[lo], 0.0, None) / self.x_min
            frac = np.sqrt(frac) if self.sqrt_start else frac
            out[lo] = 1.0 + (self.values[0] - 1.0) * frac
        if np.any(hi):
            out[hi] = np.clip(euler(self.transform, flat[hi]), 0.0, self.values[-1])
        out = out.reshape(x.shape)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class MixtureService:
    """Service law ``(1 - eps) * ph + eps * heavy``."""

    eps: float
    ph: RationalLST
    heavy: HeavyComponent

    def __post_init__(self):
        if not 0.0 <= self.eps < 1.0:
            raise ConfigInvalid("eps must lie in [0, 1)")

    @property
    def mean(self) -> float:
        return (1.0 - self.eps) * self.ph.mean + self.eps * self.heavy.mean

    @property
    def mean_shift(self) -> float:
        """Derivative of the mean with respect to ``eps``."""
        return self.heavy.mean - self.ph.mean

    def lst(self, s, continuation: bool = False):
        return (1.0 - self.eps) * self.ph(s) + self.eps * self.heavy.lst(s, continuation)

    __call__ = lst

    def with_eps(self, eps: float) -> "MixtureService":
        return MixtureService(eps, self.ph, self.heavy)


# -- functional interface ---------------------------------------------------------


def lst_eval(d, s):
    """Transform value of a rational law or heavy component at ``s``."""
    if isinstance(d, HeavyComponent):
        return d.lst(s)
    return d(s)


def mean(d) -> float:
    return d.mean


def excess_lst(d, s):
    """``(1 - lst(s)) / (mean * s)``, continuously extended by 1 at ``s = 0``."""
    if isinstance(d, HeavyComponent):
        return d.excess_lst(s)
    s = np.asarray(s, dtype=complex)
    small = np.abs(s) < 1e-300
    safe = np.where(small, 1.0, s)
    out = np.where(small, 1.0, (1.0 - d(safe)) / (d.mean * safe))
    return out if out.ndim else complex(out)


def heavy_tails(h: HeavyComponent):
    """The pair ``(P(H > x), P(H^e > x))`` as callables."""
    return h.tail, h.excess_tail
