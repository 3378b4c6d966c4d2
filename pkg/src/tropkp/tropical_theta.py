"""Tropical theta values, Delaunay sets and maximal linear forms.

Everything here is exact.  The tropical theta value

    Theta(alpha) = max_x  alpha B x^T - 1/2 x B x^T,    x integer,

is a closest-vector problem in disguise: the maximisers are the lattice points
nearest to ``alpha`` in the ``B``-norm, and
``Theta = 1/2 alpha B alpha^T - 1/2 min_x (x - alpha) B (x - alpha)^T``.
Nearest points are found by Fincke-Pohst enumeration on an exact LDL^T
factorisation; square roots are only used (in floating point, widened by one)
to propose candidate ranges that are then filtered exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .tropical_period import (
    LinearForm,
    SymbolicPeriodMatrix,
    TropicalPeriodMatrix,
    is_positive_definite,
    quadratic_form,
    specialize,
)

__all__ = [
    "DelaunaySet",
    "MaximalForm",
    "MaximalElements",
    "DecompositionReport",
    "ldl",
    "closest_vectors",
    "tropical_objective",
    "tropical_theta",
    "delaunay_set",
    "maximal_forms_at",
    "maximal_elements",
    "verify_max_form_decomposition",
]


@dataclass(frozen=True)
class DelaunaySet:
    points: tuple[tuple[int, ...], ...]
    value: Fraction

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)


@dataclass(frozen=True)
class MaximalForm:
    form: LinearForm
    witnesses: tuple[tuple[int, ...], ...]

    def value_at(self, lengths: Mapping[str, object]) -> Fraction:
        return self.form.evaluate(lengths)


@dataclass(frozen=True)
class MaximalElements:
    forms: tuple[MaximalForm, ...]
    radius: int
    stable: bool


@dataclass
class DecompositionReport:
    theta: Fraction
    best_form_value: Fraction | None
    delaunay: DelaunaySet
    achieving: list[MaximalForm]
    maximal: MaximalElements
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _entries(B) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in (B.entries if hasattr(B, "entries") else B)]


def ldl(B) -> tuple[list[list[Fraction]], list[Fraction]]:
    """Exact ``B = L diag(d) L^T`` with ``L`` unit lower triangular."""
    a = _entries(B)
    n = len(a)
    L = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    d = [Fraction(0)] * n
    for j in range(n):
        d[j] = a[j][j] - sum((L[j][k] ** 2 * d[k] for k in range(j)), Fraction(0))
        if d[j] <= 0:
            raise ValueError("matrix is not positive definite")
        for i in range(j + 1, n):
            L[i][j] = (a[i][j] - sum((L[i][k] * L[j][k] * d[k] for k in range(j)), Fraction(0))) / d[j]
    return L, d


def _qdist(a: list[list[Fraction]], x: Sequence[int], alpha: Sequence[Fraction]) -> Fraction:
    y = [Fraction(xi) - ai for xi, ai in zip(x, alpha)]
    n = len(y)
    return sum((y[i] * a[i][j] * y[j] for i in range(n) for j in range(n)), Fraction(0))


def closest_vectors(B, alpha: Sequence) -> tuple[Fraction, list[tuple[int, ...]]]:
    """All integer ``x`` minimising ``(x - alpha) B (x - alpha)^T``, and the minimum.

    Depth-first Schnorr-Euchner enumeration; the pruning bound is the best
    value found so far, compared with ``<=`` so that ties survive.
    """
    a = _entries(B)
    n = len(a)
    alpha = [Fraction(v) for v in alpha]
    if len(alpha) != n:
        raise ValueError(f"alpha has length {len(alpha)}, expected {n}")
    if n == 0:
        return Fraction(0), [()]
    if not is_positive_definite(a):
        raise ValueError("period matrix is not positive definite")
    L, d = ldl(a)

    # Babai point: greedy nearest choice at every level gives an initial bound
    x = [0] * n
    for i in reversed(range(n)):
        c = alpha[i] - sum((L[j][i] * (x[j] - alpha[j]) for j in range(i + 1, n)), Fraction(0))
        x[i] = round(c)
    best = _qdist(a, x, alpha)
    found: list[tuple[int, ...]] = []

    def candidates(c: Fraction, room: Fraction, di: Fraction):
        if room < 0:
            return []
        half = math.sqrt(float(room / di)) if room > 0 else 0.0
        lo = math.floor(float(c) - half) - 1
        hi = math.ceil(float(c) + half) + 1
        ok = [k for k in range(lo, hi + 1) if di * (k - c) ** 2 <= room]
        ok.sort(key=lambda k: (abs(k - c), k))
        return ok

    cur = [0] * n

    def search(i: int, partial: Fraction):
        nonlocal best, found
        c = alpha[i] - sum((L[j][i] * (cur[j] - alpha[j]) for j in range(i + 1, n)), Fraction(0))
        for k in candidates(c, best - partial, d[i]):
            val = partial + d[i] * (k - c) ** 2
            if val > best:
                continue
            cur[i] = k
            if i == 0:
                if val < best:
                    best = val
                    found = [tuple(cur)]
                else:
                    found.append(tuple(cur))
            else:
                search(i - 1, val)

    search(n - 1, Fraction(0))
    return best, sorted(set(found))


def tropical_objective(B, alpha: Sequence, x: Sequence[int]):
    """``alpha B x^T - 1/2 x B x^T``; a ``LinearForm`` when ``B`` is symbolic."""
    alpha = [Fraction(v) for v in alpha]
    return quadratic_form(B, alpha, x) - quadratic_form(B, x) * Fraction(1, 2)


def delaunay_set(B: TropicalPeriodMatrix, alpha: Sequence) -> DelaunaySet:
    alpha = [Fraction(v) for v in alpha]
    a = _entries(B)
    dist, pts = closest_vectors(a, alpha)
    n = len(a)
    half_norm = sum((alpha[i] * a[i][j] * alpha[j] for i in range(n) for j in range(n)), Fraction(0)) / 2
    return DelaunaySet(tuple(pts), half_norm - dist / 2)


def tropical_theta(B: TropicalPeriodMatrix, alpha: Sequence) -> Fraction:
    return delaunay_set(B, alpha).value


def _group_forms(B_sym: SymbolicPeriodMatrix, alpha, points) -> list[MaximalForm]:
    groups: dict[LinearForm, list] = {}
    for x in points:
        groups.setdefault(tropical_objective(B_sym, alpha, x), []).append(tuple(x))
    out = [MaximalForm(f, tuple(sorted(w))) for f, w in groups.items()]
    out.sort(key=lambda m: m.witnesses[0])
    return out


def maximal_forms_at(B_sym: SymbolicPeriodMatrix, lengths: Mapping[str, object],
                     alpha: Sequence) -> list[MaximalForm]:
    """Forms attaining the tropical theta value at a given length function.

    Each is maximal: a form dominating it would beat the optimum at ``lengths``
    because all lengths are positive.
    """
    for k, v in lengths.items():
        if Fraction(v) <= 0:
            raise ValueError(f"nonpositive length for edge {k}")
    D = delaunay_set(specialize(B_sym, lengths), alpha)
    return _group_forms(B_sym, alpha, D.points)


def _scaled_forms(B_sym: SymbolicPeriodMatrix, alpha, pts: np.ndarray):
    """Integer matrix ``2*den*a_e(x)`` for every row x of ``pts``."""
    M = B_sym.basis.matrix.astype(object)
    beta = [sum((Fraction(alpha[j]) * int(M[j, e]) for j in range(M.shape[0])), Fraction(0))
            for e in range(M.shape[1])]
    den = math.lcm(*[b.denominator for b in beta]) if beta else 1
    bnum = np.array([int(b * den) for b in beta], dtype=np.int64)
    y = pts @ B_sym.basis.matrix
    return 2 * bnum * y - den * y * y, den


def _pareto(values: np.ndarray) -> list[int]:
    """Row indices of coefficientwise-maximal rows (rows assumed unique)."""
    order = np.lexsort(values.T[::-1])[::-1]
    order = order[np.argsort(-values[order].sum(axis=1), kind="stable")]
    kept: list[int] = []
    for idx in order:
        row = values[idx]
        if kept and np.any(np.all(values[kept] >= row, axis=1)):
            continue
        kept.append(int(idx))
    return kept


def _maximal_in_box(B_sym, alpha, radius, center):
    h = B_sym.size
    if h == 0:
        return {(): ((),)}
    axes = [range(c - radius, c + radius + 1) for c in center]
    pts = np.array(list(itertools.product(*axes)), dtype=np.int64)
    vals, den = _scaled_forms(B_sym, alpha, pts)
    uniq, inverse = np.unique(vals, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    out = {}
    for u in _pareto(uniq):
        wit = tuple(sorted(tuple(int(v) for v in p) for p in pts[inverse == u]))
        out[tuple(int(v) for v in uniq[u])] = wit
    return out


def maximal_elements(B_sym: SymbolicPeriodMatrix, alpha: Sequence, radius: int = 2) -> MaximalElements:
    """Coefficientwise-maximal objective forms over the box ``|x - round(alpha)|_inf <= radius``.

    The search is repeated at twice the radius; ``stable`` records whether the
    answer (forms and witnesses) survived the doubling.  This is a certificate
    of stability, not a proof of completeness.
    """
    alpha = [Fraction(v) for v in alpha]
    center = [round(a) for a in alpha]
    small = _maximal_in_box(B_sym, alpha, radius, center)
    large = _maximal_in_box(B_sym, alpha, 2 * radius, center)
    forms = []
    for key, wit in large.items():
        forms.append(MaximalForm(tropical_objective(B_sym, alpha, wit[0]) if wit[0] != () else LinearForm(), wit))
    forms.sort(key=lambda m: m.witnesses[0])
    return MaximalElements(tuple(forms), 2 * radius, small == large)


def verify_max_form_decomposition(B_sym: SymbolicPeriodMatrix, lengths: Mapping[str, object],
                                  alpha: Sequence, radius: int | None = None) -> DecompositionReport:
    """Check that the tropical theta value is the best value of a maximal form at ``lengths``,
    and that the witnesses of the optimal forms partition the Delaunay set."""
    alpha = [Fraction(v) for v in alpha]
    B = specialize(B_sym, lengths)
    D = delaunay_set(B, alpha)
    achieving = maximal_forms_at(B_sym, lengths, alpha)
    if radius is None:
        center = [round(a) for a in alpha]
        spread = max((abs(p[i] - center[i]) for p in D.points for i in range(len(center))), default=0)
        radius = max(1, spread)
    maxi = maximal_elements(B_sym, alpha, radius)
    values = [m.value_at(lengths) for m in maxi.forms]
    best = max(values) if values else None
    best_forms = {m.form: m for m, v in zip(maxi.forms, values) if v == best}
    union = [w for m in achieving for w in m.witnesses]
    checks = {
        "theta_is_max_over_maximal_forms": best == D.value,
        "achieving_forms_agree": set(best_forms) == {m.form for m in achieving},
        "achieving_forms_are_maximal": all(
            not any(o.form != m.form and m.form.dominated_by(o.form) for o in maxi.forms) for m in achieving),
        "witnesses_partition_delaunay": sorted(union) == sorted(D.points) and len(union) == len(set(union)),
        "witness_sets_agree": all(best_forms[m.form].witnesses == m.witnesses
                                  for m in achieving if m.form in best_forms),
    }
    return DecompositionReport(D.value, best, D, achieving, maxi, checks)
