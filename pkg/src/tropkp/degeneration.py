"""Degenerating period matrices and their regularized tropical limit.

The family is built from its asymptotic form

    Z(s) = log(s) * Bbar + L0 + E(s),

with ``Bbar`` equal to ``B_C / (2 pi i)`` on the tropical block and zero
elsewhere, and ``L0`` carrying the component period matrices ``B_v``, the
couplings ``C_v`` and the constant block ``B0``.  Only the limits are
determined by the nodal curve, so the remainder ``E(s)`` is zero unless the
caller supplies one.  Index layout: vertex blocks in vertex order, then the
``h1`` tropical coordinates.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .component_data import ComponentData
from .riemann_theta import theta, validate_siegel
from .tropical_period import TropicalPeriodMatrix
from .tropical_theta import delaunay_set

__all__ = [
    "DegenerationFamily",
    "assemble_family",
    "embed_alpha",
    "limit_lhs",
    "mixture_rhs",
    "ConvergenceReport",
    "convergence_report",
    "max_workers",
]


def max_workers() -> int:
    """Worker cap from ``TROPKP_THREADS`` (default: CPU count)."""
    env = os.environ.get("TROPKP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class DegenerationFamily:
    vertex_ids: list[str]
    weights: list[int]
    B_C: TropicalPeriodMatrix
    Bbar: np.ndarray
    L0: np.ndarray
    perturbation: Callable[[float], np.ndarray] | None = None

    @property
    def genus(self) -> int:
        return self.L0.shape[0]

    @property
    def h1(self) -> int:
        return self.B_C.size

    def Z(self, s: float) -> np.ndarray:
        if not 0 < s < 1:
            raise ValueError("s must lie in (0, 1)")
        Z = math.log(s) * self.Bbar + self.L0
        if self.perturbation is not None:
            Z = Z + np.asarray(self.perturbation(s), dtype=complex)
        return validate_siegel(Z)


def assemble_family(B_C: TropicalPeriodMatrix, data: ComponentData,
                    perturbation: Callable[[float], np.ndarray] | None = None) -> DegenerationFamily:
    h1 = B_C.size
    if data.h1 != h1:
        raise ValueError(f"component data has h1={data.h1}, period matrix has size {h1}")
    g = data.genus
    t0 = g - h1
    Bbar = np.zeros((g, g), dtype=complex)
    Bbar[t0:, t0:] = B_C.to_float() / (2j * math.pi)
    L0 = np.zeros((g, g), dtype=complex)
    offs = data.vertex_offsets()
    for vid, w in zip(data.vertex_ids, data.weights):
        if not w:
            continue
        o = offs[vid]
        L0[o:o + w, o:o + w] = data.B_v[vid]
        L0[o:o + w, t0:] = data.C_v[vid]
        L0[t0:, o:o + w] = data.C_v[vid].T
    L0[t0:, t0:] = data.B0
    return DegenerationFamily(list(data.vertex_ids), list(data.weights), B_C, Bbar, L0, perturbation)


def embed_alpha(fam: DegenerationFamily, alpha: Sequence) -> np.ndarray:
    """``((0)_v, alpha)`` as a float vector of length g."""
    out = np.zeros(fam.genus)
    out[fam.genus - fam.h1:] = [float(Fraction(a)) for a in alpha]
    return out


def limit_lhs(fam: DegenerationFamily, alpha: Sequence, zbar: Sequence[complex], s: float,
              tol: float = 1e-14) -> complex:
    """``s**Theta(alpha) * theta(Z(s), zbar - log(s) * alphabar Bbar)``."""
    Theta = delaunay_set(fam.B_C, alpha).value
    ls = math.log(s)
    arg = np.asarray(zbar, dtype=complex) - ls * (embed_alpha(fam, alpha) @ fam.Bbar)
    return theta(fam.Z(s), arg, tol, log_prefactor=ls * float(Theta)).value


def mixture_rhs(fam: DegenerationFamily, data: ComponentData, alpha: Sequence, zbar: Sequence[complex],
                tol: float = 1e-14) -> complex:
    """Finite mixture: sum over the Delaunay set of exponentials times component theta values."""
    zbar = np.asarray(zbar, dtype=complex)
    g, h1 = data.genus, data.h1
    z = zbar[g - h1:]
    offs = data.vertex_offsets()
    total = 0j
    for x in delaunay_set(fam.B_C, alpha).points:
        x = np.asarray(x, dtype=float)
        term = np.exp(1j * math.pi * (x @ data.B0 @ x + 2 * z @ x))
        for vid, w in zip(data.vertex_ids, data.weights):
            if w:
                zv = zbar[offs[vid]:offs[vid] + w] + data.C_v[vid] @ x
                term *= theta(data.B_v[vid], zv, tol).value
        total += term
    return complex(total)


@dataclass
class ConvergenceReport:
    rows: list[dict]
    monotone: bool

    def to_json(self) -> dict:
        return {"rows": self.rows, "monotone": self.monotone}


def convergence_report(fam: DegenerationFamily, data: ComponentData, alpha: Sequence,
                       zbar: Sequence[complex], s_list: Sequence[float], tol: float = 1e-14) -> ConvergenceReport:
    s_list = [float(s) for s in s_list]
    if any(not 0 < s < 1 for s in s_list) or any(a <= b for a, b in zip(s_list, s_list[1:])):
        raise ValueError("s_list must be strictly decreasing inside (0, 1)")
    rhs = mixture_rhs(fam, data, alpha, zbar, tol)
    with ThreadPoolExecutor(max_workers=min(max_workers(), len(s_list))) as pool:
        lhs = list(pool.map(lambda s: limit_lhs(fam, alpha, zbar, s, tol), s_list))
    rows = []
    for i, (s, val) in enumerate(zip(s_list, lhs)):
        err = abs(val - rhs)
        row = {"s": s, "lhs": [val.real, val.imag], "rhs": [rhs.real, rhs.imag],
               "abs_error": err, "rel_error": err / abs(rhs) if rhs else math.inf, "order": None}
        if i:
            prev = rows[-1]
            if err > 0 and prev["abs_error"] > 0:
                row["order"] = math.log(err / prev["abs_error"]) / math.log(s / prev["s"])
        rows.append(row)
    errs = [r["abs_error"] for r in rows]
    return ConvergenceReport(rows, all(b < a for a, b in zip(errs, errs[1:])))
