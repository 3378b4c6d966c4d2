"""Exact tropical period matrices.

``B = M diag(l) M^T`` over the rationals, and its symbolic counterpart whose
entries are linear forms in the edge variables ``t_e``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .graph_core import CycleBasis, TropicalCurve, CurveError

__all__ = [
    "LinearForm",
    "TropicalPeriodMatrix",
    "SymbolicPeriodMatrix",
    "period_matrix",
    "symbolic_period_matrix",
    "specialize",
    "quadratic_form",
    "leading_minors",
    "is_positive_definite",
    "determinant",
]


class LinearForm:
    """Element of the rational span of edge variables, ``sum_e a_e t_e``."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Mapping[str, object] | None = None):
        clean = {}
        for k, v in (coeffs or {}).items():
            v = Fraction(v)
            if v:
                clean[k] = v
        self._coeffs = clean

    @classmethod
    def variable(cls, edge_id: str) -> "LinearForm":
        return cls({edge_id: 1})

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return dict(self._coeffs)

    def __getitem__(self, edge_id: str) -> Fraction:
        return self._coeffs.get(edge_id, Fraction(0))

    def __add__(self, other: "LinearForm") -> "LinearForm":
        if isinstance(other, int) and other == 0:
            return self
        out = dict(self._coeffs)
        for k, v in other._coeffs.items():
            out[k] = out.get(k, 0) + v
        return LinearForm(out)

    __radd__ = __add__

    def __neg__(self) -> "LinearForm":
        return LinearForm({k: -v for k, v in self._coeffs.items()})

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return self + (-other)

    def __mul__(self, scalar) -> "LinearForm":
        scalar = Fraction(scalar)
        return LinearForm({k: v * scalar for k, v in self._coeffs.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and other == 0:
            return not self._coeffs
        return isinstance(other, LinearForm) and self._coeffs == other._coeffs

    def __hash__(self):
        return hash(frozenset(self._coeffs.items()))

    def __bool__(self):
        return bool(self._coeffs)

    def __repr__(self):
        if not self._coeffs:
            return "LinearForm(0)"
        terms = " + ".join(f"{v}*t_{k}" for k, v in sorted(self._coeffs.items()))
        return f"LinearForm({terms})"

    def evaluate(self, lengths: Mapping[str, object]) -> Fraction:
        """Specialize ``t_e -> lengths[e]``."""
        return sum((v * Fraction(lengths[k]) for k, v in self._coeffs.items()), Fraction(0))

    def dominated_by(self, other: "LinearForm") -> bool:
        """Coefficientwise ``self <= other``."""
        keys = set(self._coeffs) | set(other._coeffs)
        return all(self[k] <= other[k] for k in keys)

    def to_json(self) -> dict[str, str]:
        return {f"t_{k}": _frac_str(v) for k, v in sorted(self._coeffs.items())}

    @classmethod
    def from_json(cls, doc: Mapping[str, str]) -> "LinearForm":
        return cls({k[2:] if k.startswith("t_") else k: Fraction(v) for k, v in doc.items()})


def _frac_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class TropicalPeriodMatrix:
    """Symmetric positive definite rational matrix, reported with the basis that produced it."""

    entries: tuple[tuple[Fraction, ...], ...]
    basis: CycleBasis | None = None

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries], dtype=float).reshape(self.size, self.size)

    def to_json(self) -> list[list[str]]:
        return [[_frac_str(x) for x in row] for row in self.entries]


@dataclass(frozen=True)
class SymbolicPeriodMatrix:
    entries: tuple[tuple[LinearForm, ...], ...]
    basis: CycleBasis | None = None

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    def to_json(self) -> list[list[dict]]:
        return [[x.to_json() for x in row] for row in self.entries]


def _check_basis(curve: TropicalCurve, basis: CycleBasis) -> None:
    if tuple(curve.edge_ids) != basis.edge_ids:
        raise CurveError("cycle basis does not belong to this curve", "basis")


def period_matrix(curve: TropicalCurve, basis: CycleBasis) -> TropicalPeriodMatrix:
    _check_basis(curve, basis)
    lengths = [e.length for e in curve.edges]
    M = basis.matrix
    h = M.shape[0]
    rows = []
    for j in range(h):
        row = []
        for k in range(h):
            row.append(sum((lengths[e] * int(M[j, e]) * int(M[k, e])
                            for e in range(M.shape[1]) if M[j, e] and M[k, e]), Fraction(0)))
        rows.append(tuple(row))
    return TropicalPeriodMatrix(tuple(rows), basis)


def symbolic_period_matrix(basis: CycleBasis) -> SymbolicPeriodMatrix:
    M = basis.matrix
    h = M.shape[0]
    rows = []
    for j in range(h):
        rows.append(tuple(
            LinearForm({basis.edge_ids[e]: int(M[j, e]) * int(M[k, e])
                        for e in range(M.shape[1]) if M[j, e] and M[k, e]})
            for k in range(h)))
    return SymbolicPeriodMatrix(tuple(rows), basis)


def specialize(B_sym: SymbolicPeriodMatrix, lengths: Mapping[str, object]) -> TropicalPeriodMatrix:
    return TropicalPeriodMatrix(tuple(tuple(x.evaluate(lengths) for x in row) for row in B_sym.entries),
                                B_sym.basis)


def quadratic_form(B, x: Sequence[int], y: Sequence[int] | None = None):
    """Exact ``x B y^T`` for a numeric or symbolic period matrix (``y`` defaults to ``x``)."""
    if y is None:
        y = x
    n = B.size
    if len(x) != n or len(y) != n:
        raise ValueError(f"dimension mismatch: matrix is {n}x{n}, vectors have {len(x)} and {len(y)}")
    symbolic = isinstance(B, SymbolicPeriodMatrix)
    acc = LinearForm() if symbolic else Fraction(0)
    for i in range(n):
        if not x[i]:
            continue
        for j in range(n):
            if y[j]:
                acc = acc + B.entries[i][j] * (Fraction(x[i]) * Fraction(y[j]))
    return acc


def leading_minors(entries) -> list[Fraction]:
    """Exact leading principal minors by fraction-valued Gaussian elimination."""
    n = len(entries)
    a = [[Fraction(x) for x in row] for row in entries]
    minors = []
    det = Fraction(1)
    for k in range(n):
        if a[k][k] == 0:
            # a zero pivot means this minor is 0; remaining minors are not needed for PD tests
            minors.append(Fraction(0))
            return minors + [None] * (n - k - 1)
        det *= a[k][k]
        minors.append(det)
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return minors


def is_positive_definite(B) -> bool:
    entries = B.entries if hasattr(B, "entries") else B
    n = len(entries)
    for i in range(n):
        for j in range(i):
            if Fraction(entries[i][j]) != Fraction(entries[j][i]):
                return False
    return all(m is not None and m > 0 for m in leading_minors(entries))


def determinant(entries) -> Fraction:
    """Exact determinant (with row pivoting)."""
    n = len(entries)
    a = [[Fraction(x) for x in row] for row in entries]
    det = Fraction(1)
    for k in range(n):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            f = a[i][k] / a[k][k]
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
    return det
