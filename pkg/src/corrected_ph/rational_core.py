"""Polynomial and rational-function arithmetic over complex coefficients.

Polynomials store ascending-degree coefficients. Everything here is
double precision with explicit tolerances; the matrices involved are
small (N <= 8) and degrees stay in the low tens.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import CancellationFailure, MultiplePole, ZeroPolynomial

#: two roots are "equal" if ``|r1 - r2| < CLUSTER_RTOL * (1 + |r1|)``
CLUSTER_RTOL = 1e-7
#: relative size below which a leading coefficient is treated as round-off
TRIM_RTOL = 1e-13


def same_root(a: complex, b: complex, rtol: float = CLUSTER_RTOL) -> bool:
    return abs(a - b) < rtol * (1.0 + abs(a))


class Poly:
    """Polynomial with complex coefficients in ascending degree order."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, trim_rtol: float = TRIM_RTOL):
        c = np.array(np.atleast_1d(coeffs), dtype=complex)
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        scale = np.max(np.abs(c))
        n = c.size
        while n > 1 and abs(c[n - 1]) <= trim_rtol * scale:
            n -= 1
        if n == 1 and abs(c[0]) <= trim_rtol * scale:
            c = np.zeros(1, dtype=complex)
        self.coeffs = c[:n]
        self.coeffs.setflags(write=False)

    @classmethod
    def from_roots(cls, roots: Iterable[complex], lead: complex = 1.0) -> "Poly":
        c = np.array([lead], dtype=complex)
        for r in roots:
            # multiply by (s - r)
            c = np.concatenate(([0.0], c)) - r * np.concatenate((c, [0.0]))
        return cls(c, trim_rtol=0.0)

    @classmethod
    def monomial(cls, degree: int, coef: complex = 1.0) -> "Poly":
        c = np.zeros(degree + 1, dtype=complex)
        c[-1] = coef
        return cls(c)

    # -- basic properties -------------------------------------------------
    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1])

    def __repr__(self):
        return f"Poly({np.round(self.coeffs, 12).tolist()})"

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.coeffs[-1], dtype=complex)
        for c in self.coeffs[-2::-1]:
            out = out * s + c
        return out if out.ndim else complex(out)

    def scale_at(self, s: complex) -> float:
        """Size of the evaluation at ``s`` absent cancellation."""
        return float(np.sum(np.abs(self.coeffs) * abs(s) ** np.arange(self.coeffs.size)))

    def allclose(self, other: "Poly", rtol: float = 1e-12) -> bool:
        if self.degree != other.degree:
            return False
        scale = max(np.max(np.abs(self.coeffs)), np.max(np.abs(other.coeffs)))
        return bool(np.all(np.abs(self.coeffs - other.coeffs) <= rtol * scale))

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "Poly":
        return other if isinstance(other, Poly) else Poly([other])

    def __add__(self, other):
        other = self._coerce(other)
        n = max(self.coeffs.size, other.coeffs.size)
        c = np.zeros(n, dtype=complex)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return Poly(c)

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self.coeffs)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            return Poly(self.coeffs * complex(other))
        if self.is_zero or other.is_zero:
            return Poly([0.0])
        return Poly(np.convolve(self.coeffs, other.coeffs), trim_rtol=0.0)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Poly([1.0])
        for _ in range(k):
            out = out * self
        return out

    def deriv(self) -> "Poly":
        if self.degree == 0:
            return Poly([0.0])
        return Poly(self.coeffs[1:] * np.arange(1, self.coeffs.size))

    def monic(self) -> "Poly":
        if self.is_zero:
            raise ZeroPolynomial("cannot normalize the zero polynomial")
        return Poly(self.coeffs / self.coeffs[-1], trim_rtol=0.0)

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        q, r = np.polynomial.polynomial.polydiv(self.coeffs, other.coeffs)
        return Poly(q, trim_rtol=0.0), Poly(r)

    def deflate(self, root: complex) -> "Poly":
        """Synthetic division by ``(s - root)``; the remainder is dropped."""
        c = self.coeffs
        n = c.size - 1
        if n < 1:
            raise ValueError("cannot deflate a constant")
        q = np.empty(n, dtype=complex)
        acc = c[-1]
        for k in range(n - 1, -1, -1):
            q[k] = acc
            acc = c[k] + acc * root
        return Poly(q, trim_rtol=0.0)

    def roots(self) -> np.ndarray:
        return poly_roots(self).values

    def trimmed(self, radius: float = 1.0, rtol: float = 1e-11) -> "Poly":
        """Drop leading coefficients that are negligible on ``|s| <= radius``."""
        c = self.coeffs
        w = np.abs(c) * radius ** np.arange(c.size)
        total = w.sum()
        n = c.size
        while n > 1 and w[n - 1] <= rtol * total:
            n -= 1
        return Poly(c[:n], trim_rtol=0.0)


class RootSet(NamedTuple):
    values: np.ndarray
    multiplicity: np.ndarray


def _companion(c: np.ndarray) -> np.ndarray:
    n = c.size - 1
    mat = np.zeros((n, n), dtype=complex)
    mat[1:, :-1] = np.eye(n - 1)
    mat[:, -1] = -c[:-1] / c[-1]
    return mat


def _polish(p: Poly, dp: Poly, r: complex, steps: int = 3) -> complex:
    best, best_val = r, abs(p(r))
    for _ in range(steps):
        d = dp(r)
        if d == 0:
            break
        r = r - p(r) / d
        val = abs(p(r))
        if val < best_val:
            best, best_val = r, val
    return complex(best)


def poly_roots(p: Poly, cluster_rtol: float = CLUSTER_RTOL) -> RootSet:
    """Roots of ``p`` from the eigenvalues of its companion matrix.

    Simple roots are refined with a few Newton steps. Roots closer than
    the clustering tolerance are reported with their cluster size as
    multiplicity (and are not polished, since Newton converges poorly
    there).
    """
    if p.is_zero:
        raise ZeroPolynomial("all coefficients are zero")
    if p.degree < 1:
        raise ValueError("root finding needs degree >= 1")
    c = p.coeffs
    # leading zeros at the origin are exact
    nz = int(np.argmax(c != 0))
    core = c[nz:]
    vals = np.zeros(nz, dtype=complex)
    if core.size > 1:
        ev = np.linalg.eigvals(_companion(core))
        vals = np.concatenate((vals, ev))
    mult = np.ones(vals.size, dtype=int)
    for i in range(vals.size):
        mult[i] = sum(same_root(vals[i], vals[j], cluster_rtol) for j in range(vals.size))
    dp = p.deriv()
    vals = np.array(
        [_polish(p, dp, r) if m == 1 and r != 0 else r for r, m in zip(vals, mult)],
        dtype=complex,
    )
    order = np.lexsort((vals.imag, vals.real))
    return RootSet(vals[order], mult[order])


def _cancel_common(num: Poly, den: Poly, rtol: float) -> tuple[Poly, Poly]:
    if num.degree < 1 or den.degree < 1:
        return num, den
    nr = poly_roots(num).values
    dr = poly_roots(den).values
    used = np.zeros(nr.size, dtype=bool)
    pairs = []
    for r in dr:
        dist = np.where(used, np.inf, np.abs(nr - r))
        k = int(np.argmin(dist))
        if np.isfinite(dist[k]) and dist[k] < rtol * (1.0 + abs(r)):
            used[k] = True
            pairs.append((nr[k], r))
    for z, r in sorted(pairs, key=lambda zr: abs(zr[1])):
        num = num.deflate(z)
        den = den.deflate(r)
    return num, den


def cancel_known(num: Poly, poles: Sequence[complex], rtol: float = 1e-9) -> tuple[Poly, list]:
    """Deflate ``num`` at listed poles where it vanishes; returns the reduced pair."""
    remaining = list(poles)
    changed = True
    while changed and num.degree >= 1:
        changed = False
        for i, p in enumerate(remaining):
            if abs(num(p)) <= rtol * num.scale_at(max(abs(p), 1.0)):
                num = num.deflate(p)
                remaining.pop(i)
                changed = True
                break
    return num, remaining


class RationalFn:
    """Ratio of two polynomials, kept with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, cancel: bool = True, rtol: float = CLUSTER_RTOL):
        num = num if isinstance(num, Poly) else Poly(num)
        den = Poly([1.0]) if den is None else (den if isinstance(den, Poly) else Poly(den))
        if den.is_zero:
            raise ZeroDivisionError("zero denominator polynomial")
        if num.is_zero:
            self.num, self.den = Poly([0.0]), Poly([1.0])
            return
        if cancel:
            num, den = _cancel_common(num, den, rtol)
        lead = den.lead
        self.num = Poly(num.coeffs / lead)
        self.den = Poly(den.coeffs / lead, trim_rtol=0.0)

    @classmethod
    def const(cls, value: complex) -> "RationalFn":
        return cls(Poly([value]))

    @classmethod
    def from_known_poles(cls, num: Poly, poles: Sequence[complex], lead: complex = 1.0,
                         rtol: float = 1e-9) -> "RationalFn":
        """Build ``num / (lead * prod(s - p))`` cancelling poles where ``num`` vanishes.

        The pole list may contain repeats. Cancellation is decided by the
        value of the numerator at each listed pole, which avoids root-finding
        on denominators with clustered roots.
        """
        num, remaining = cancel_known(num, poles, rtol)
        den = Poly.from_roots(remaining, lead)
        return cls(num, den, cancel=False)

    def __repr__(self):
        return f"RationalFn(num={self.num!r}, den={self.den!r})"

    def __call__(self, s):
        return self.num(s) / self.den(s)

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    def limit_at_infinity(self) -> complex:
        if self.num.degree > self.den.degree:
            return complex(np.inf)
        if self.num.degree < self.den.degree:
            return 0j
        return self.num.lead / self.den.lead

    def poles(self) -> np.ndarray:
        return self.den.roots() if self.den.degree >= 1 else np.zeros(0, dtype=complex)

    def zeros(self) -> np.ndarray:
        return self.num.roots() if self.num.degree >= 1 else np.zeros(0, dtype=complex)

    def _coerce(self, other) -> "RationalFn":
        return as_rational(other)

    def __add__(self, other):
        other = self._coerce(other)
        if self.den.allclose(other.den):
            return RationalFn(self.num + other.num, self.den)
        return RationalFn(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFn(-self.num, self.den, cancel=False)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        return RationalFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * other.den, self.den * other.num)

    def deriv(self) -> "RationalFn":
        return RationalFn(self.num.deriv() * self.den - self.num * self.den.deriv(), self.den * self.den)


def as_rational(x) -> RationalFn:
    if isinstance(x, RationalFn):
        return x
    if isinstance(x, Poly):
        return RationalFn(x, cancel=False)
    return RationalFn.const(x)


# -- partial fractions ---------------------------------------------------------


@dataclass(frozen=True)
class PartialFractions:
    """``constant + sum(residue / (s - pole)**order)``."""

    constant: complex
    terms: list = field(default_factory=list)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.full(s.shape, self.constant, dtype=complex)
        for pole, residue, order in self.terms:
            out = out + residue / (s - pole) ** order
        return out if out.ndim else complex(out)

    @property
    def poles(self) -> np.ndarray:
        return np.array([t[0] for t in self.terms], dtype=complex)

    @property
    def residues(self) -> np.ndarray:
        return np.array([t[1] for t in self.terms], dtype=complex)


def partial_fractions(f: RationalFn) -> PartialFractions:
    """Expand a proper rational function with simple poles.

    Raises:
        MultiplePole: if two poles fall within the clustering tolerance.
    """
    if not f.is_proper:
        raise ValueError("numerator degree exceeds denominator degree")
    constant = f.limit_at_infinity()
    if f.den.degree == 0:
        return PartialFractions(constant, [])
    rs = poly_roots(f.den)
    if np.any(rs.multiplicity > 1):
        raise MultiplePole(f"pole cluster detected near {rs.values[rs.multiplicity > 1][0]:.6g}")
    dden = f.den.deriv()
    terms = [(complex(p), complex(f.num(p) / dden(p)), 1) for p in rs.values]
    return PartialFractions(complex(constant), terms)


def _taylor_shift(p: Poly, x0: complex) -> np.ndarray:
    """Coefficients of ``p(x0 + z)`` in ascending powers of ``z``."""
    out = np.zeros(p.degree + 1, dtype=complex)
    cur = p
    fact = 1.0
    for k in range(p.degree + 1):
        out[k] = cur(x0) / fact
        cur = cur.deriv()
        fact *= k + 1
    return out


def _series_div(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """First ``n`` Taylor coefficients of ``a(z) / b(z)``; needs ``b[0] != 0``."""
    a = np.concatenate((a, np.zeros(max(0, n - a.size))))
    b = np.concatenate((b, np.zeros(max(0, n - b.size))))
    q = np.zeros(n, dtype=complex)
    for k in range(n):
        q[k] = (a[k] - np.dot(q[:k], b[k:0:-1])) / b[0]
    return q


def group_poles(poles: Sequence[complex], rtol: float = CLUSTER_RTOL) -> list[tuple[complex, int]]:
    """Collapse a pole list with repeats into ``(pole, multiplicity)`` pairs."""
    groups: list[list] = []
    for p in poles:
        for g in groups:
            if same_root(g[0], p, rtol):
                g[1] += 1
                break
        else:
            groups.append([complex(p), 1])
    return [(g[0], g[1]) for g in groups]


def partial_fractions_known(num: Poly, poles: Sequence[complex], lead: complex = 1.0) -> PartialFractions:
    """Expand ``num / (lead * prod(s - p))`` where the pole multiset is known.

    Repeated poles are allowed; coefficients come from Taylor series at
    each pole, so no root finding on the denominator is needed. Poles at
    which the numerator vanishes simply receive (near) zero coefficients.
    """
    groups = group_poles(poles)
    deg_den = sum(m for _, m in groups)
    if num.degree > deg_den:
        raise ValueError("numerator degree exceeds denominator degree")
    constant = num.coeffs[deg_den] / lead if num.degree == deg_den and deg_den < num.coeffs.size else 0.0
    terms = []
    for p, m in groups:
        others = [q for q, k in groups if q != p for _ in range(k)]
        den = Poly.from_roots([q - p for q in others], lead)
        coeffs = _series_div(_taylor_shift(num, p), den.coeffs, m)
        for k in range(m):
            terms.append((p, complex(coeffs[k]), m - k))
    return PartialFractions(complex(constant), terms)


# -- rational matrices ---------------------------------------------------------


def _row_lcm(dens: list[Poly]) -> Poly:
    distinct: list[Poly] = []
    for d in dens:
        if d.degree == 0:
            continue
        if not any(d.allclose(e, 1e-10) for e in distinct):
            distinct.append(d)
    out = Poly([1.0])
    for d in distinct:
        out = out * d.monic()
    return out


def row_polynomial_form(M: Sequence[Sequence]) -> tuple[list[list[Poly]], list[Poly]]:
    """Write ``M = diag(1/d_i) P`` with polynomial ``P``.

    Each row is brought over the product of its distinct (monic)
    denominators, which keeps degrees low when only a few rows carry a
    service transform.
    """
    rows = [[as_rational(e) for e in row] for row in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    mpoly, dens = [], []
    for row in rows:
        d = _row_lcm([e.den for e in row])
        prow = []
        for e in row:
            q, r = d.divmod(e.den.monic())
            if r.scale_at(1.0) > 1e-9 * max(d.scale_at(1.0), 1.0):
                raise CancellationFailure("row denominator is not a common multiple")
            prow.append(e.num * q * (1.0 / e.den.lead))
        mpoly.append(prow)
        dens.append(d)
    return mpoly, dens


def poly_det_adj(mpoly: list[list[Poly]], need_adj: bool = True):
    """Determinant and adjugate of a polynomial matrix by memoized cofactor expansion.

    Cost is O(N^2 2^N) polynomial products, fine for N <= 8.
    """
    n = len(mpoly)
    memo: dict = {}

    def minor(rows: tuple, cols: tuple) -> Poly:
        if not rows:
            return Poly([1.0])
        key = (rows, cols)
        hit = memo.get(key)
        if hit is not None:
            return hit
        r0, rest = rows[0], rows[1:]
        acc = Poly([0.0])
        for k, c in enumerate(cols):
            e = mpoly[r0][c]
            if e.is_zero:
                continue
            term = e * minor(rest, cols[:k] + cols[k + 1:])
            acc = acc + term if k % 2 == 0 else acc - term
        memo[key] = acc
        return acc

    allr = tuple(range(n))
    det = minor(allr, allr)
    if not need_adj:
        return det, None
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = allr[:j] + allr[j + 1:]
            cols = allr[:i] + allr[i + 1:]
            m = minor(rows, cols)
            adj[i][j] = m if (i + j) % 2 == 0 else -m
    return det, adj


def rational_det(M: Sequence[Sequence]) -> RationalFn:
    """Determinant of a square matrix of rational functions."""
    mpoly, dens = row_polynomial_form(M)
    det, _ = poly_det_adj(mpoly, need_adj=False)
    total = Poly([1.0])
    for d in dens:
        total = total * d
    return RationalFn(det, total)


def rational_adjugate(M: Sequence[Sequence]) -> list[list[RationalFn]]:
    """Adjugate of a square matrix of rational functions, ``M adj(M) = det(M) I``."""
    mpoly, dens = row_polynomial_form(M)
    _, adj = poly_det_adj(mpoly)
    n = len(mpoly)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            d = Poly([1.0])
            for k in range(n):
                if k != j:
                    d = d * dens[k]
            row.append(RationalFn(adj[i][j], d))
        out.append(row)
    return out


def evaluate_matrix(M: Sequence[Sequence[RationalFn]], s: complex) -> np.ndarray:
    return np.array([[e(s) for e in row] for row in M], dtype=complex)
