"""Truncated power series over the complex numbers.

Univariate series are 1-d arrays of coefficients.  Multivariate series in a
few variables are dense arrays indexed by exponent tuples and truncated at a
total degree; a leading batch axis is allowed so that many expansion points
can be processed at once.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "mul",
    "inv",
    "log",
    "exp",
    "power",
    "compose",
    "reverse",
    "derivative",
    "monomials",
    "MultiSeries",
]


def mul(a, b, n=None):
    n = n or min(len(a), len(b))
    return np.convolve(a, b)[:n]


def inv(a, n=None):
    a = np.asarray(a, dtype=complex)
    n = n or len(a)
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term is not invertible")
    out = np.zeros(n, dtype=complex)
    out[0] = 1 / a[0]
    for k in range(1, n):
        m = min(k, len(a) - 1)
        out[k] = -np.dot(a[1:m + 1], out[k - 1::-1][:m]) / a[0]
    return out


def derivative(a):
    a = np.asarray(a)
    return a[1:] * np.arange(1, len(a))


def _integral(a, c0=0):
    a = np.asarray(a, dtype=complex)
    return np.concatenate([[c0], a / np.arange(1, len(a) + 1)])


def log(a, n=None):
    """``log(a)`` with the principal branch for the constant term."""
    a = np.asarray(a, dtype=complex)
    n = n or len(a)
    da = derivative(a)[:n - 1]
    return _integral(mul(da, inv(a, n - 1), n - 1), np.log(a[0]))[:n]


def exp(a, n=None):
    a = np.asarray(a, dtype=complex)
    n = n or len(a)
    out = np.zeros(n, dtype=complex)
    out[0] = np.exp(a[0])
    da = derivative(a)
    # f' = a' f
    for k in range(1, n):
        m = min(k, len(da))
        out[k] = np.dot(da[:m], out[k - 1::-1][:m]) / k
    return out


def power(a, p: int, n=None):
    a = np.asarray(a, dtype=complex)
    n = n or len(a)
    if p < 0:
        return power(inv(a, n), -p, n)
    out = np.zeros(n, dtype=complex)
    out[0] = 1
    base = a[:n]
    while p:
        if p & 1:
            out = mul(out, base, n)
        base = mul(base, base, n)
        p >>= 1
    return out


def compose(f, g, n=None):
    """``f(g(x))`` for ``g(0) == 0``."""
    g = np.asarray(g, dtype=complex)
    n = n or len(g)
    if abs(g[0]) > 0:
        raise ValueError("inner series must vanish at 0")
    out = np.zeros(n, dtype=complex)
    gk = np.zeros(n, dtype=complex)
    gk[0] = 1
    for k in range(min(len(f), n)):
        out += f[k] * gk
        gk = mul(gk, g, n)
    return out


def reverse(g, n=None):
    """Compositional inverse of ``g = x + ...``."""
    g = np.asarray(g, dtype=complex)
    n = n or len(g)
    if abs(g[0]) > 0 or g[1] == 0:
        raise ValueError("series must be x + O(x^2)")
    # Newton-free fixed point: h = (x - (g(h) - g1 h)) / g1, one order per sweep
    h = np.zeros(n, dtype=complex)
    h[1] = 1 / g[1]
    x = np.zeros(n, dtype=complex)
    x[1] = 1
    rest = g.copy()
    rest[1] = 0
    for _ in range(n):
        h = (x - compose(rest, h, n)) / g[1]
    return h


def monomials(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of total degree <= ``degree``, graded then lexicographic."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.product(range(d + 1), repeat=nvars):
            if sum(combo) == d:
                out.append(combo)
    return out


class MultiSeries:
    """Batched multivariate truncated series stored as ``(batch, deg+1, ..., deg+1)`` arrays."""

    def __init__(self, coeffs: np.ndarray, degree: int):
        self.c = coeffs
        self.degree = degree

    @property
    def nvars(self) -> int:
        return self.c.ndim - 1

    @classmethod
    def from_monomials(cls, values: np.ndarray, nvars: int, degree: int) -> "MultiSeries":
        """``values[:, k]`` is the coefficient of ``monomials(nvars, degree)[k]``."""
        c = np.zeros((values.shape[0],) + (degree + 1,) * nvars, dtype=complex)
        for k, mono in enumerate(monomials(nvars, degree)):
            c[(slice(None),) + mono] = values[:, k]
        return cls(c, degree)

    def _mask(self):
        idx = np.indices((self.degree + 1,) * self.nvars).sum(axis=0)
        return idx <= self.degree

    def __mul__(self, other: "MultiSeries") -> "MultiSeries":
        d = self.degree
        out = np.zeros_like(self.c)
        monos = monomials(self.nvars, d)
        for a in monos:
            ca = self.c[(slice(None),) + a]
            if not np.any(ca):
                continue
            rem = d - sum(a)
            for b in monos:
                if sum(b) > rem:
                    break
                tgt = tuple(x + y for x, y in zip(a, b))
                out[(slice(None),) + tgt] += ca * other.c[(slice(None),) + b]
        return MultiSeries(out, d)

    def log(self) -> "MultiSeries":
        """Logarithm, constant term via the principal branch of each batch entry."""
        zero = (slice(None),) + (0,) * self.nvars
        c0 = self.c[zero].copy()
        f = MultiSeries(self.c / c0.reshape((-1,) + (1,) * self.nvars), self.degree)
        f.c[zero] = 0
        acc = np.zeros_like(self.c)
        power_ = MultiSeries(f.c.copy(), self.degree)
        for k in range(1, self.degree + 1):
            acc += ((-1) ** (k + 1) / k) * power_.c
            power_ = power_ * f
        acc[zero] = np.log(c0)
        return MultiSeries(acc, self.degree)

    def derivative_at_zero(self, multi_index: tuple[int, ...]) -> np.ndarray:
        """``d^beta f(0)`` for every batch entry."""
        fac = math.prod(math.factorial(k) for k in multi_index)
        return fac * self.c[(slice(None),) + tuple(multi_index)]
