"""Random instances, independent oracles and the acceptance checks.

Each ``check_*`` function returns a ``CheckResult``; ``run_acceptance`` runs
all eight.  The oracles here deliberately avoid the code paths they test:
exhaustive lattice search instead of sphere decoding, numerical contour
integrals instead of closed-form logarithms and series algebra, and plain
summation for the theta function.
"""

from __future__ import annotations

import cmath
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from .bundled import load_example
from .component_data import (BasePoint, ComponentDataError, MarkedComponent, build_component_data)
from .degeneration import convergence_report
from .graph_core import CycleBasis, Edge, TropicalCurve, Vertex, cycle_basis
from .riemann_theta import quasi_periodicity_residual, theta
from .tau_kp import kp_residual, tau_family, tau_limit
from .tropical_period import period_matrix, symbolic_period_matrix
from .tropical_theta import closest_vectors, verify_max_form_decomposition

__all__ = [
    "CheckResult",
    "random_curve",
    "random_alpha",
    "random_siegel",
    "brute_force_closest",
    "optimum_inside_box",
    "reference_theta_g1",
    "contour_b0",
    "contour_expansions",
    "s_consistency_times",
    "check_tropical_theta_oracle",
    "check_max_form_identity",
    "check_riemann_theta",
    "check_limit_convergence",
    "check_soliton_residuals",
    "check_mixed_residual",
    "check_s_consistency",
    "check_component_oracles",
    "CHECKS",
    "run_acceptance",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.seconds:.2f}s / {self.budget:.0f}s) {self.details.get('summary', '')}"


def _timed(name: str, budget: float, fn: Callable[[], tuple[bool, dict]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, details = fn()
    dt = time.perf_counter() - t0
    return CheckResult(name, bool(ok and dt < budget), dt, budget, details)


# ---------------------------------------------------------------------------
# random instances


def random_curve(rng: np.random.Generator, max_vertices: int = 6, max_edges: int = 9, max_h1: int = 4,
                 min_h1: int = 1, weights: bool = False) -> TropicalCurve:
    """Connected multigraph with loops allowed and rational lengths in [1, 10]."""
    while True:
        n = int(rng.integers(1, max_vertices + 1))
        vids = [f"v{i + 1}" for i in range(n)]
        pairs = [(vids[int(rng.integers(0, i))], vids[i]) for i in range(1, n)]
        budget = max_edges - len(pairs)
        if budget < min_h1:
            continue
        extra = int(rng.integers(min_h1, min(max_h1, budget) + 1))
        for _ in range(extra):
            a, b = (vids[int(k)] for k in rng.integers(0, n, size=2))
            pairs.append((a, b))
        order = rng.permutation(len(pairs))
        edges = []
        for k, idx in enumerate(order):
            den = int(rng.integers(1, 7))
            num = int(rng.integers(den, 10 * den + 1))
            a, b = pairs[idx]
            if rng.random() < 0.5:
                a, b = b, a
            edges.append(Edge(f"e{k + 1}", a, b, Fraction(num, den)))
        ws = [int(rng.integers(0, 2)) if weights else 0 for _ in vids]
        return TropicalCurve(tuple(Vertex(v, w) for v, w in zip(vids, ws)), tuple(edges))


def random_alpha(rng: np.random.Generator, h1: int, bound: int = 2) -> tuple[Fraction, ...]:
    out = []
    for _ in range(h1):
        den = int(rng.integers(1, 7))
        out.append(Fraction(int(rng.integers(-bound * den, bound * den + 1)), den))
    return tuple(out)


def random_siegel(rng: np.random.Generator, g: int) -> np.ndarray:
    A = rng.normal(size=(g, g)) / math.sqrt(g)
    Y = A @ A.T + 0.4 * np.eye(g)
    X = rng.uniform(-0.5, 0.5, size=(g, g))
    return (X + X.T) / 2 + 1j * Y


# ---------------------------------------------------------------------------
# oracles: tropical theta


def _common_scale(B, alpha):
    n = len(alpha)
    dA = math.lcm(*[Fraction(a).denominator for a in alpha]) if n else 1
    entries = [[Fraction(B[i][j]) for j in range(n)] for i in range(n)]
    dB = math.lcm(*[e.denominator for row in entries for e in row]) if n else 1
    Bi = np.array([[int(e * dB) for e in row] for row in entries], dtype=np.int64)
    ai = np.array([int(Fraction(a) * dA) for a in alpha], dtype=np.int64)
    return Bi, ai, dA, dB


def brute_force_closest(B, alpha, box: int = 12) -> tuple[Fraction, list[tuple[int, ...]]]:
    """Exhaustive minimum of ``(x - alpha) B (x - alpha)`` over ``|x|_inf <= box``, in exact integers."""
    n = len(alpha)
    if n == 0:
        return Fraction(0), [()]
    Bi, ai, dA, dB = _common_scale(B, alpha)
    axis = np.arange(-box, box + 1, dtype=np.int64)
    best, found = None, []
    # iterate over the first coordinate to keep memory flat
    rest = np.stack(np.meshgrid(*([axis] * (n - 1)), indexing="ij"), axis=-1).reshape(-1, n - 1) if n > 1 \
        else np.zeros((1, 0), dtype=np.int64)
    for x0 in axis:
        X = np.column_stack([np.full(len(rest), x0), rest])
        Y = dA * X - ai
        vals = np.einsum("ki,ij,kj->k", Y, Bi, Y)
        m = int(vals.min())
        if best is None or m < best:
            best, found = m, [tuple(int(v) for v in r) for r in X[vals == m]]
        elif m == best:
            found.extend(tuple(int(v) for v in r) for r in X[vals == m])
    return Fraction(best, dA * dA * dB), sorted(found)


def optimum_inside_box(B, alpha, box: int = 12, margin: float = 0.5) -> bool:
    """True if every minimiser provably satisfies ``|x|_inf <= box``.

    A minimiser obeys ``|x - alpha|_2^2 <= d / lam_min`` where ``d`` is the value
    at the rounded point.
    """
    n = len(alpha)
    if n == 0:
        return True
    Bf = np.array([[float(B[i][j]) for j in range(n)] for i in range(n)])
    lam = float(np.linalg.eigvalsh(Bf)[0])
    x = [round(Fraction(a)) for a in alpha]
    y = np.array([float(xi - Fraction(a)) for xi, a in zip(x, alpha)])
    radius = math.sqrt(float(y @ Bf @ y) / lam)
    return max(abs(float(a)) for a in alpha) + radius + margin <= box


def reference_theta_g1(tau: complex, z: complex, nmax: int = 60) -> complex:
    n = np.arange(-nmax, nmax + 1)
    return complex(np.sum(np.exp(1j * np.pi * n * n * tau + 2j * np.pi * n * z)))


# ---------------------------------------------------------------------------
# oracles: component data by numerical contour integration


def _oracle_residues(basis: CycleBasis, j: int) -> dict[str, complex]:
    res = {}
    for k, eid in enumerate(basis.edge_ids):
        m = int(basis.matrix[j, k])
        if m:
            res[eid] = m / (2j * math.pi)
            res["-" + eid] = -m / (2j * math.pi)
    return res


def _quad(g, lo: float, hi: float) -> complex:
    # a part that is zero up to rounding cannot meet a relative tolerance; quadpack
    # then warns about roundoff although the value is as accurate as it gets
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(g, lo, hi, complex_func=True, epsabs=1e-13, epsrel=1e-11, limit=400)
    return val


def _log_spaced_integral(items, P: complex, Q: complex, pole_p: bool, pole_q: bool, eps: float) -> complex:
    """Integral of ``sum r / (zeta - c)`` along ``P -> Q``, cut at distance ``eps`` from
    pole ends.  Near a pole the substitution ``r = exp(v)`` keeps the integrand flat,
    and ``zeta - c`` is formed as ``(A - c) + offset`` so no digits cancel."""
    d = Q - P
    L = abs(d)
    u = d / L

    def f(A, off):
        return sum(r / ((A - c) + off) for r, c in items)

    def piece(A, direction, pole):
        # integral from A (or A + eps * direction) to the midpoint
        if pole:
            def g(v):
                r = math.exp(v)
                return f(A, direction * r) * direction * r
            lo, hi = math.log(eps), math.log(L / 2)
        else:
            def g(s_):
                return f(A, direction * s_) * direction
            lo, hi = 0.0, L / 2
        return _quad(g, lo, hi)

    return piece(P, u, pole_p) - piece(Q, -u, pole_q)


def contour_b0(curve: TropicalCurve, basis: CycleBasis, nodes: dict[str, complex], eps: float = 1e-13) -> np.ndarray:
    """Full (unsymmetrised) matrix of regularised b-periods on a rational nodal curve.

    Each cycle is walked as straight segments between node points; at an end
    where the integrand has a pole ``r / (zeta - c)`` the integral is cut at
    distance ``eps`` and ``r * log(zeta_cut - c)`` is added back (start) or
    subtracted (end), the regularisation by the node coordinate.
    """
    h1 = basis.rank
    owner = {}
    for e in curve.edges:
        owner[e.id] = e.tail
        owner["-" + e.id] = e.head
    B = np.zeros((h1, h1), dtype=complex)
    for j, walk in enumerate(basis.paths):
        halves = [eid if s > 0 else "-" + eid for eid, s in walk]
        for i, h in enumerate(halves):
            entry = h[1:] if h.startswith("-") else "-" + h
            exit_ = halves[(i + 1) % len(halves)]
            v = owner[entry]
            P, Q = nodes[entry], nodes[exit_]
            for k in range(h1):
                res = {hh: r for hh, r in _oracle_residues(basis, k).items() if owner[hh] == v}
                if not res:
                    continue
                items = [(r, nodes[hh]) for hh, r in res.items()]
                rp = sum(r for r, c in items if c == P)
                rq = sum(r for r, c in items if c == Q)
                val = _log_spaced_integral(items, P, Q, rp != 0, rq != 0, eps)
                u = (Q - P) / abs(Q - P)
                if rp:
                    val += rp * cmath.log(eps * u)
                if rq:
                    val -= rq * cmath.log(-eps * u)
                B[j, k] += val
    return B


def _circle(fn, radius: float) -> complex:
    """``(1 / 2 pi i) * contour integral of fn(w) dw`` over ``|w| = radius``."""
    def g(theta_):
        w = radius * cmath.exp(1j * theta_)
        return fn(w) * 1j * w

    return _quad(g, 0.0, 2 * math.pi) / (2j * math.pi)


def contour_expansions(basis: CycleBasis, curve: TropicalCurve, nodes: dict[str, complex], base: BasePoint,
                       order: int) -> tuple[np.ndarray, np.ndarray]:
    """``(r_trop, q)`` for a rational base component by contour integrals in the chart.

    The uniformiser is ``w = zeta - p`` (or ``1 / zeta`` at infinity) and the
    chart ``z = w + a2 w^2 + ...`` is a polynomial, so everything is explicit.
    """
    chart = list(base.chart)

    def z_of(w):
        return w + sum(a * w ** (k + 2) for k, a in enumerate(chart))

    def dz_of(w):
        return 1 + sum((k + 2) * a * w ** (k + 1) for k, a in enumerate(chart))

    if base.point is None:
        def zeta_of(w):
            return 1 / w

        def dzeta(w):
            return -1 / w ** 2

        dists = [abs(1 / nodes[h]) if nodes[h] != 0 else math.inf for h in nodes]
    else:
        def zeta_of(w):
            return base.point + w

        def dzeta(w):
            return 1.0

        dists = [abs(nodes[h] - base.point) for h in nodes]
    # the circle must enclose no node and no zero of z(w) other than w = 0
    roots = np.roots(list(reversed([1.0] + chart))) if any(chart) else np.array([])
    rho = 0.5 * min([2.0] + [abs(x) for x in roots] + [d for d in dists if d < math.inf])

    owner = {}
    for e in curve.edges:
        owner[e.id] = e.tail
        owner["-" + e.id] = e.head
    h1 = basis.rank
    r = np.zeros((order, h1), dtype=complex)
    for j in range(h1):
        items = [(res, nodes[h]) for h, res in _oracle_residues(basis, j).items() if owner[h] == base.vertex]
        for m in range(1, order + 1):
            def fn(w, items=items, m=m):
                zeta = zeta_of(w)
                return sum(res / (zeta - c) for res, c in items) * dzeta(w) * z_of(w) ** (-m)
            r[m - 1, j] = _circle(fn, rho)
    q = np.zeros((order, order), dtype=complex)
    if any(chart):
        for n in range(1, order + 1):
            coeffs = [_circle(lambda w, k=k: z_of(w) ** (-n) * w ** (k - 1), rho) for k in range(1, n + 1)]

            def principal(w, coeffs=coeffs):
                return sum(c * w ** (-(k + 1)) for k, c in enumerate(coeffs))

            for m in range(1, order + 1):
                def fn(w, m=m, n=n, principal=principal):
                    zz = z_of(w)
                    return (zz ** (-n) - principal(w)) * zz ** (-m - 1) * dz_of(w)
                q[n - 1, m - 1] = m * _circle(fn, rho)
    return r, q


def s_consistency_times(rng: np.random.Generator, count: int, M: int, box: float = 0.5) -> np.ndarray:
    """Sample times for the s-consistency check: ``t1..t3`` uniform in ``[-box, box]``, higher times 0."""
    t = np.zeros((count, M))
    t[:, :3] = rng.uniform(-box, box, size=(count, 3))
    return t


# ---------------------------------------------------------------------------
# acceptance checks


def check_tropical_theta_oracle(seed: int = 1, count: int = 50, box: int = 12) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        done, mismatches, skipped = 0, 0, 0
        while done < count:
            curve = random_curve(rng)
            basis = cycle_basis(curve)
            B = period_matrix(curve, basis)
            alpha = random_alpha(rng, basis.rank)
            if not optimum_inside_box(B.entries, alpha, box):
                skipped += 1
                continue
            dist, pts = closest_vectors(B, alpha)
            bdist, bpts = brute_force_closest(B.entries, alpha, box)
            if dist != bdist or pts != bpts:
                mismatches += 1
            done += 1
        return mismatches == 0, {"instances": done, "mismatches": mismatches, "rejected": skipped,
                                 "summary": f"{done} instances, {mismatches} mismatches"}
    return _timed("tropical theta / Delaunay vs exhaustive search", 10, run)


def check_max_form_identity(seed: int = 2, count: int = 20) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        failures = []
        for i in range(count):
            curve = random_curve(rng, max_h1=3)
            basis = cycle_basis(curve)
            alpha = random_alpha(rng, basis.rank)
            report = verify_max_form_decomposition(symbolic_period_matrix(basis), curve.lengths, alpha)
            if not report.passed:
                failures.append({"instance": i, "checks": report.checks})
        return not failures, {"instances": count, "failures": failures,
                              "summary": f"{count} instances, {len(failures)} failures"}
    return _timed("tropical theta = max over maximal forms, witness partition", 5, run)


def check_riemann_theta(seed: int = 3, count: int = 100) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_q, worst_e = 0.0, 0.0
        for _ in range(count):
            g = int(rng.integers(1, 5))
            Z = random_siegel(rng, g)
            z = rng.uniform(-0.5, 0.5, g) + 1j * (Z.imag @ rng.uniform(-0.5, 0.5, g))
            base = theta(Z, z).value
            if abs(base) < 1e-6:
                continue
            worst_e = max(worst_e, abs(theta(Z, -z).value - base) / abs(base))
            for i in range(g):
                worst_q = max(worst_q, quasi_periodicity_residual(Z, z, i))
        val = theta(np.array([[1j]]), [0.0]).value
        ref = reference_theta_g1(1j, 0.0)
        oracle = abs(val - ref)
        ok = worst_q < 1e-10 and worst_e < 1e-12 and oracle < 1e-12
        return ok, {"max_quasi_periodicity": worst_q, "max_evenness": worst_e, "g1_oracle_error": oracle,
                    "summary": f"quasi {worst_q:.1e}, even {worst_e:.1e}, oracle {oracle:.1e}"}
    return _timed("Riemann theta quasi-periodicity, evenness, g=1 oracle", 10, run)


S_SWEEP = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)


def check_limit_convergence() -> CheckResult:
    def run():
        out, ok = {}, True
        for name in ("single_loop", "elliptic_loop"):
            ex = load_example(name)
            rep = convergence_report(ex.family, ex.data, ex.alpha, ex.z, S_SWEEP)
            rel = rep.rows[-1]["rel_error"]
            out[name] = {"monotone": rep.monotone, "rel_error_at_1e-5": rel}
            ok = ok and rep.monotone and rel < 1e-6
        out["summary"] = ", ".join(f"{k}: rel {v['rel_error_at_1e-5']:.1e}" for k, v in out.items())
        return ok, out
    return _timed("regularised tropical limit of theta", 30, run)


def check_soliton_residuals() -> CheckResult:
    def run():
        one = kp_residual(load_example("single_loop").spec()).relative_residual
        two = kp_residual(load_example("two_loop").spec()).relative_residual
        bad = load_example("two_loop")
        bad.data.B0[0, 1] += 0.3
        bad.data.B0[1, 0] += 0.3
        neg = kp_residual(bad.spec()).relative_residual
        ok = one < 1e-10 and two < 1e-8 and neg > 1e-2
        return ok, {"one_soliton": one, "two_soliton": two, "corrupted": neg,
                    "summary": f"1-sol {one:.1e}, 2-sol {two:.1e}, corrupted {neg:.1e}"}
    return _timed("KP residual of soliton tau functions", 30, run)


def check_mixed_residual() -> CheckResult:
    def run():
        rel = kp_residual(load_example("elliptic_loop").spec()).relative_residual
        return rel < 1e-6, {"relative_residual": rel, "summary": f"relative residual {rel:.1e}"}
    return _timed("KP residual, soliton on elliptic background", 60, run)


def check_s_consistency(seed: int = 7, count: int = 5, s: float = 1e-5) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        out, ok = {}, True
        for name in ("two_loop", "elliptic_loop"):
            ex = load_example(name)
            lim = ex.spec("limit")
            fam = ex.spec("family", s=s, regularized=True)
            errs = []
            for t in s_consistency_times(rng, count, lim.times):
                a, b = tau_family(fam, t), tau_limit(lim, t)
                errs.append(abs(a - b) / abs(b))
            out[name] = max(errs)
            ok = ok and max(errs) < 1e-5
        out["summary"] = ", ".join(f"{k}: {v:.1e}" for k, v in out.items())
        return ok, out
    return _timed("regularised family tau converges to the limit tau", 30, run)


def _random_nodes(rng: np.random.Generator, curve: TropicalCurve) -> dict[str, complex]:
    nodes = {}
    for e in curve.edges:
        for h in (e.id, "-" + e.id):
            nodes[h] = complex(*rng.uniform(-2, 2, 2))
    return nodes


def check_component_oracles(seed: int = 8, count: int = 20, order: int = 4) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_b, worst_r, worst_q, worst_sym = 0.0, 0.0, 0.0, 0.0
        done = 0
        while done < count:
            curve = random_curve(rng, max_vertices=3, max_edges=5, max_h1=3)
            basis = cycle_basis(curve)
            nodes = _random_nodes(rng, curve)
            v0 = curve.vertex_ids[int(rng.integers(0, len(curve.vertex_ids)))]
            point = None if rng.random() < 0.5 else complex(*rng.uniform(-2, 2, 2))
            chart = tuple(complex(*rng.uniform(-0.5, 0.5, 2)) for _ in range(int(rng.integers(1, 3))))
            base = BasePoint(v0, point, chart)
            owner = {e.id: e.tail for e in curve.edges} | {"-" + e.id: e.head for e in curve.edges}
            marked = [MarkedComponent(v, 0, {h: c for h, c in nodes.items() if owner[h] == v})
                      for v in curve.vertex_ids]
            try:
                data = build_component_data(curve, basis, marked, base, order)
            except ComponentDataError:
                continue  # segment through a node; draw again
            full = contour_b0(curve, basis, nodes)
            iu = np.triu_indices(basis.rank)
            worst_b = max(worst_b, float(np.max(np.abs(full[iu] - data.B0[iu]), initial=0.0)))
            worst_b = max(worst_b, float(np.max(np.abs((full - full.T) - data.branch_offsets), initial=0.0)))
            r, q = contour_expansions(basis, curve, nodes, base, order)
            scale = max(1.0, float(np.max(np.abs(r))))
            worst_r = max(worst_r, float(np.max(np.abs(r - data.r_trop))) / scale)
            qs = max(1.0, float(np.max(np.abs(q))))
            worst_q = max(worst_q, float(np.max(np.abs(q - data.q))) / qs)
            worst_sym = max(worst_sym, float(np.max(np.abs(data.q - data.q.T))) / qs)
            done += 1
        ok = max(worst_b, worst_r, worst_q, worst_sym) < 1e-9
        return ok, {"B0": worst_b, "r_trop": worst_r, "q": worst_q, "q_symmetry": worst_sym,
                    "summary": f"B0 {worst_b:.1e}, r {worst_r:.1e}, q {worst_q:.1e}, sym {worst_sym:.1e}"}
    return _timed("component data vs contour integration", 30, run)


CHECKS = (
    check_tropical_theta_oracle,
    check_max_form_identity,
    check_riemann_theta,
    check_limit_convergence,
    check_soliton_residuals,
    check_mixed_residual,
    check_s_consistency,
    check_component_oracles,
)


def run_acceptance() -> list[CheckResult]:
    return [check() for check in CHECKS]
