"""Riemann theta function by truncated lattice summation.

    theta(Z, z) = sum_u exp(pi i (u Z u^T + 2 z u^T)),   u in Z^g.

With ``Y = Im Z`` and ``u0 = -Y^{-1} Im z`` every term has modulus
``exp(pi u0 Y u0) * exp(-pi q(u))`` where ``q(u) = (u - u0) Y (u - u0)^T``.
Summation runs over an ellipsoid ``q(u) <= R^2``; ``R`` comes from the bound

    sum_{q(u) > R^2} exp(-pi q(u)) <= exp(-pi R^2 / 2) (1 + sqrt(2 / lam))^g,

``lam`` the smallest eigenvalue of ``Y``.  The radius is widened by the
distance from ``u0`` to the lattice so that the omitted tail is below ``tol``
relative to the largest term.  No Siegel reduction is done.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "ThetaError",
    "PrecisionError",
    "ThetaValue",
    "validate_siegel",
    "tail_bound",
    "truncation_radius",
    "ellipsoid_points",
    "theta_lattice",
    "theta",
    "theta_derivative",
    "quasi_periodicity_residual",
]

MAX_RADIUS = 60.0
MAX_POINTS = 5_000_000


class ThetaError(ValueError):
    pass


class PrecisionError(ArithmeticError):
    """The requested tolerance cannot be met (radius cap or overflow)."""


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    truncation_radius: float
    bound: float
    npoints: int

    def __complex__(self):
        return complex(self.value)


def validate_siegel(Z, atol: float = 1e-12) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if Z.shape[0] != Z.shape[1]:
        raise ThetaError(f"Z must be square, got shape {Z.shape}")
    scale = max(1.0, float(np.max(np.abs(Z)))) if Z.size else 1.0
    if Z.size and np.max(np.abs(Z - Z.T)) > atol * scale:
        raise ThetaError("Z is not symmetric")
    if Z.size:
        try:
            np.linalg.cholesky(Z.imag)
        except np.linalg.LinAlgError as exc:
            raise ThetaError("Im Z is not positive definite") from exc
    return Z


def tail_bound(radius: float, lam: float, g: int, order: int = 0, center_norm: float = 0.0) -> float:
    """Relative bound on the omitted terms, polynomial factor ``|2 pi u|^order`` included."""
    base = (1.0 + math.sqrt(2.0 / lam)) ** g
    if order == 0:
        return math.exp(-math.pi * radius ** 2 / 2) * base
    qs = radius ** 2 + np.linspace(0.0, 200.0, 4001)
    poly = (2 * math.pi * (center_norm + np.sqrt(qs / lam))) ** order
    sup = float(np.max(poly * np.exp(-math.pi * qs / 4)))
    return sup * math.exp(-math.pi * radius ** 2 / 4) * base


def truncation_radius(tol: float, lam: float, g: int, order: int = 0, center_norm: float = 0.0) -> float:
    if tol <= 0:
        raise ThetaError("tol must be positive")
    r = 1.0
    while tail_bound(r, lam, g, order, center_norm) >= tol:
        r *= 1.05
        if r > MAX_RADIUS:
            raise PrecisionError(f"tolerance {tol:g} needs a truncation radius above {MAX_RADIUS}")
    return r


def ellipsoid_points(Y: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    """Integer points with ``(u - center) Y (u - center)^T <= radius^2`` (Fincke-Pohst, vectorised by level)."""
    g = Y.shape[0]
    if g == 0:
        return np.zeros((1, 0), dtype=np.int64)
    R = np.linalg.cholesky(Y).T  # Y = R^T R, R upper triangular
    r2 = radius ** 2 * (1 + 1e-12) + 1e-12
    pts = np.zeros((1, 0), dtype=np.int64)
    partial = np.zeros(1)
    for i in reversed(range(g)):
        # coordinates i+1..g-1 are fixed in pts (stored in that order)
        if pts.shape[1]:
            tail = (pts - center[i + 1:]) @ R[i, i + 1:]
        else:
            tail = np.zeros(len(pts))
        c = center[i] - tail / R[i, i]
        half = np.sqrt(np.maximum(r2 - partial, 0.0)) / R[i, i]
        lo = np.ceil(c - half).astype(np.int64)
        hi = np.floor(c + half).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total > MAX_POINTS:
            raise PrecisionError("too many lattice points; Im Z is badly conditioned for this tolerance")
        rep = np.repeat(np.arange(len(pts)), counts)
        offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        vals = lo[rep] + offs
        newpart = partial[rep] + (R[i, i] * (vals - c[rep])) ** 2
        keep = newpart <= r2
        pts = np.column_stack([vals[keep], pts[rep][keep]])
        partial = newpart[keep]
    return pts


def _nearest_sq(Y: np.ndarray, centers: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Upper bound on ``min_u (u - c) Y (u - c)^T`` for each row ``c`` of ``centers``.

    The minimum is taken over ``pts`` and the rounded centre; it is exact
    whenever the nearest lattice point is among ``pts``.
    """
    out = np.empty(len(centers))
    step = max(1, 4_000_000 // max(len(pts), 1))
    for i in range(0, len(centers), step):
        c = centers[i:i + step]
        r = np.rint(c) - c
        best = np.einsum("ki,ij,kj->k", r, Y, r)
        if len(pts):
            d = pts[None, :, :] - c[:, None, :]
            best = np.minimum(best, np.einsum("pki,ij,pkj->pk", d, Y, d).min(axis=1))
        out[i:i + step] = best
    return out


def theta_lattice(Z: np.ndarray, im_z: np.ndarray, tol: float, order: int = 0) -> tuple[np.ndarray, float, float]:
    """Lattice points good for every ``Im z`` in the rows of ``im_z`` (and their convex hull).

    The omitted tail is below ``tol`` times the largest term, not just times
    the envelope ``exp(pi u0 Y u0)``: when ``u0`` sits at Y-distance ``d`` from
    the lattice every term is at most ``exp(-pi d^2)`` times the envelope, so
    the radius grows to ``sqrt(R^2 + k d^2)`` with ``k = 2`` (``4`` for
    derivatives, matching the exponent in ``tail_bound``).

    Returns ``(points, radius, bound)``.
    """
    Y = Z.imag
    g = Y.shape[0]
    im_z = np.atleast_2d(np.asarray(im_z, dtype=float))
    if not g:
        return np.zeros((1, 0), dtype=np.int64), 0.0, 0.0
    lam = float(np.linalg.eigvalsh(Y)[0])
    centers = -np.linalg.solve(Y, im_z.T).T
    mid = 0.5 * (centers.min(axis=0) + centers.max(axis=0))
    diffs = centers - mid
    # the Y-distance to ``mid`` is convex, so the rows (hull vertices) bound it on the hull
    spread = float(np.sqrt(np.max(np.einsum("ki,ij,kj->k", diffs, Y, diffs))))
    cnorm = float(np.max(np.linalg.norm(centers, axis=1)))
    radius = truncation_radius(tol, lam, g, order, cnorm)
    pts = ellipsoid_points(Y, mid, radius + spread)
    # a hull point lies within 2 * spread of some row, so its distance to the lattice is at most d_row + 2 spread
    d = float(np.sqrt(np.max(_nearest_sq(Y, centers, pts)))) + (2 * spread if len(centers) > 1 else 0.0)
    k = 2 if order == 0 else 4
    wide = math.sqrt(radius ** 2 + k * d ** 2)
    if wide > radius * (1 + 1e-12):
        if wide > MAX_RADIUS:
            raise PrecisionError("theta argument too far from the lattice for this tolerance")
        pts = ellipsoid_points(Y, mid, wide + spread)
    return pts, radius, tail_bound(radius, lam, g, order, cnorm)


def _terms_exponent(Z: np.ndarray, z: np.ndarray, pts: np.ndarray) -> np.ndarray:
    quad = np.einsum("ki,ij,kj->k", pts, Z, pts)
    return 1j * np.pi * (quad + 2 * pts @ z)


def theta(Z, z: Sequence[complex], tol: float = 1e-14, derivative: Sequence[int] | None = None,
          log_prefactor: complex = 0.0) -> ThetaValue:
    """Theta value (or a partial derivative with multi-index ``derivative``).

    ``log_prefactor`` is added to every exponent before exponentiation; use it
    to carry factors such as ``s**Theta`` without overflow.
    """
    Z = validate_siegel(Z)
    g = Z.shape[0]
    z = np.asarray(z, dtype=complex).reshape(g)
    order = 0 if derivative is None else int(sum(derivative))
    if derivative is not None and len(derivative) != g:
        raise ThetaError(f"derivative multi-index must have length {g}")
    pts, radius, bound = theta_lattice(Z, z.imag[None, :], tol, order)
    expo = _terms_exponent(Z, z, pts) + log_prefactor
    if derivative is not None and order:
        poly = np.prod((2j * np.pi * pts) ** np.asarray(derivative), axis=1)
    else:
        poly = 1.0
    if np.max(expo.real, initial=-np.inf) > 700:
        raise PrecisionError("theta value overflows double precision; pass a log_prefactor")
    value = complex(np.sum(poly * np.exp(expo)))
    return ThetaValue(value, radius, bound, len(pts))


def theta_derivative(Z, z, order: Sequence[int], tol: float = 1e-14) -> complex:
    return theta(Z, z, tol, derivative=order).value


def quasi_periodicity_residual(Z, z, i: int, tol: float = 1e-14) -> float:
    """``|theta(z + Z e_i) - m theta(z)| / |m theta(z)|`` with ``m = exp(-pi i Z_ii - 2 pi i z_i)``.

    Both sides have the size of ``m theta(z)``, so that is the scale of the rounding error.
    """
    Z = validate_siegel(Z)
    z = np.asarray(z, dtype=complex)
    base = theta(Z, z, tol).value
    if abs(base) < 1e3 * tol:
        raise ThetaError("theta(z) vanishes to working precision; residual undefined")
    shifted = theta(Z, z + Z[:, i], tol).value
    expected = np.exp(-1j * np.pi * Z[i, i] - 2j * np.pi * z[i]) * base
    return float(abs(shifted - expected) / abs(expected))
