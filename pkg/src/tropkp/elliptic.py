"""Odd Jacobi theta function on the torus C / (Z + tau Z).

    vartheta(w) = sum_n exp(pi i tau (n + 1/2)^2 + 2 pi i (n + 1/2)(w + 1/2))

is odd, vanishes exactly on the lattice, and satisfies
``vartheta(w + 1) = -vartheta(w)``,
``vartheta(w + tau) = -exp(-pi i tau - 2 pi i w) vartheta(w)``.
Its logarithmic derivative ``L = vartheta'/vartheta`` is 1-periodic with simple
poles of residue 1 on the lattice, and ``L(w + tau) = L(w) - 2 pi i``.
"""

from __future__ import annotations

import math

import numpy as np

from . import series

__all__ = ["odd_theta_taylor", "odd_theta", "log_derivative", "log_taylor", "log_derivative_taylor"]


def _indices(tau: complex, im_w: float, order: int) -> np.ndarray:
    y = tau.imag
    if y <= 0:
        raise ValueError("Im tau must be positive")
    # |term| ~ exp(-pi y (n+1/2)^2 - 2 pi (n+1/2) Im w) * |2 pi (n+1/2)|^order
    centre = -im_w / y
    width = math.sqrt(45.0 / (math.pi * y)) + math.sqrt(order + 1) + 2
    lo = math.floor(centre - width) - 1
    hi = math.ceil(centre + width) + 1
    return np.arange(lo, hi + 1) + 0.5


def odd_theta_taylor(w0: complex, tau: complex, order: int) -> np.ndarray:
    """Coefficients ``vartheta^{(k)}(w0) / k!`` for ``k = 0..order``."""
    n = _indices(tau, complex(w0).imag, order)
    base = np.exp(1j * np.pi * tau * n ** 2 + 2j * np.pi * n * (w0 + 0.5))
    out = np.empty(order + 1, dtype=complex)
    fac = 2j * np.pi * n
    powk = np.ones_like(n, dtype=complex)
    for k in range(order + 1):
        out[k] = np.sum(base * powk) / math.factorial(k)
        powk = powk * fac
    return out


def odd_theta(w, tau: complex, derivative: int = 0):
    w = np.asarray(w, dtype=complex)
    flat = w.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for i, wi in enumerate(flat):
        out[i] = odd_theta_taylor(wi, tau, derivative)[derivative] * math.factorial(derivative)
    return out.reshape(w.shape)


def log_derivative(w, tau: complex):
    """``L(w) = vartheta'(w) / vartheta(w)``."""
    w = np.asarray(w, dtype=complex)
    flat = w.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    for i, wi in enumerate(flat):
        c = odd_theta_taylor(wi, tau, 1)
        out[i] = c[1] / c[0]
    return out.reshape(w.shape)


def log_taylor(w0: complex, tau: complex, order: int) -> np.ndarray:
    """Taylor coefficients of ``log vartheta(w0 + z)``; at ``w0 = 0`` the regular part
    ``log(vartheta(z) / z)`` is expanded instead."""
    if w0 == 0:
        c = odd_theta_taylor(0.0, tau, order + 1)[1:]
    else:
        c = odd_theta_taylor(w0, tau, order)
    return series.log(c, order + 1)


def log_derivative_taylor(w0: complex, tau: complex, order: int) -> np.ndarray:
    """Taylor coefficients (degree ``< order``) of ``L(w0 + z)``, excluding ``1/z`` when ``w0 = 0``."""
    return series.derivative(log_taylor(w0, tau, order))
