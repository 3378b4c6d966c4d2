"""Per-component Riemann surface data of the nodal curve.

Each vertex ``v`` carries a smooth component ``R_v`` with one marked point per
half-edge starting at ``v``: ``x_e`` on the tail of ``e`` and ``x_{-e}`` on its
head.  Gluing ``x_e`` to ``x_{-e}`` gives the nodal curve.  Two component
types are computed here:

* genus 0: the projective line with coordinate ``zeta``;
* genus 1: the torus ``C / (Z + tau Z)`` with flat coordinate ``u``.

Conventions (they fix every sign downstream):

* Local coordinate at a node ``x_h`` is ``zeta - x_h`` (resp. ``u - x_h``).
* The differential dual to cycle ``b_j`` has residue ``M[j, e] / (2 pi i)``
  at ``x_e`` and the opposite residue at ``x_{-e}``.  On a torus it is
  normalised to have zero period along the horizontal line just below the
  nodes, which requires node coordinates with ``0 <= Im u < Im tau``.
* Cycle ``b_j`` is walked as in ``CycleBasis.paths``; on each component it
  runs along the straight segment from its entry node to its exit node.
  Node-to-node integrals are regularised by dropping
  ``residue * log(local coordinate)`` at both ends.
* Genus-1 components have ``a``-period ``1`` and ``b``-period ``tau``; their
  holomorphic differential is ``du``.

Components of genus 2 or more are accepted only as ready-made data
(``load_component_data``).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate

from . import elliptic, series
from .graph_core import CycleBasis, TropicalCurve
from .riemann_theta import ThetaError, validate_siegel

__all__ = [
    "ComponentDataError",
    "MarkedComponent",
    "BasePoint",
    "ComponentData",
    "residues",
    "cycle_segments",
    "build_component_data",
    "rational_component_data",
    "elliptic_component_data",
    "load_component_data",
    "dump_component_data",
    "parse_components",
    "chart_q_coefficients",
    "rational_differential",
    "regularized_log_integral",
]

TWO_PI_I = 2j * math.pi


class ComponentDataError(ValueError):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class MarkedComponent:
    """A component ``R_v`` with its node coordinates, keyed by half-edge (``"e"`` or ``"-e"``)."""

    vertex: str
    genus: int
    nodes: Mapping[str, complex]
    tau: complex | None = None


@dataclass(frozen=True)
class BasePoint:
    """Point ``p`` on ``R_{v0}`` and local coordinate ``z``.

    ``point=None`` means ``zeta = infinity`` (genus 0 only).  The uniformiser
    is ``w = 1/zeta`` at infinity and ``w = zeta - p`` (or ``u - p``) otherwise;
    ``chart`` holds ``(a2, a3, ...)`` with ``z = w + a2 w^2 + a3 w^3 + ...``.
    """

    vertex: str
    point: complex | None = None
    chart: tuple[complex, ...] = ()


@dataclass
class ComponentData:
    vertex_ids: list[str]
    weights: list[int]
    base_vertex: str
    order: int
    B_v: dict[str, np.ndarray]
    C_v: dict[str, np.ndarray]
    r_base: np.ndarray  # (order, w(v0)): expansions of the holomorphic differentials of R_{v0} at p
    q: np.ndarray  # (order, order)
    r_trop: np.ndarray  # (order, h1)
    B0: np.ndarray  # (h1, h1)
    branch_offsets: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))

    def __post_init__(self):
        _validate_data(self)

    @property
    def h1(self) -> int:
        return self.B0.shape[0]

    @property
    def genus(self) -> int:
        return self.h1 + sum(self.weights)

    def vertex_offsets(self) -> dict[str, int]:
        off, out = 0, {}
        for vid, w in zip(self.vertex_ids, self.weights):
            out[vid] = off
            off += w
        return out

    def stacked_r(self) -> np.ndarray:
        """``(order, g)`` rows ``r_m`` in the layout (vertex blocks, tropical block)."""
        g = self.genus
        out = np.zeros((self.order, g), dtype=complex)
        off = self.vertex_offsets()[self.base_vertex]
        w0 = self.weights[self.vertex_ids.index(self.base_vertex)]
        out[:, off:off + w0] = self.r_base
        out[:, g - self.h1:] = self.r_trop
        return out

    def to_json(self) -> dict:
        return dump_component_data(self)


def _cx(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _cx_array(a: np.ndarray):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return _cx(a)
    return [_cx_array(x) for x in a]


def _parse_complex(value, path: str) -> complex:
    try:
        if isinstance(value, (list, tuple)) and len(value) == 2:
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, str):
            return complex(value.replace(" ", "").replace("i", "j"))
        if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
            return complex(value)
    except (TypeError, ValueError):
        pass
    raise ComponentDataError(f"cannot parse {value!r} as a complex number", path)


def _parse_array(value, shape: tuple[int, ...], path: str) -> np.ndarray:
    def rec(v, p, depth):
        if depth == len(shape):
            return _parse_complex(v, p)
        if not isinstance(v, (list, tuple)) or len(v) != shape[depth]:
            raise ComponentDataError(f"expected a list of length {shape[depth]}", p)
        return [rec(x, f"{p}[{i}]", depth + 1) for i, x in enumerate(v)]

    if shape and 0 in shape:
        return np.zeros(shape, dtype=complex)
    return np.array(rec(value, path, 0), dtype=complex).reshape(shape)


def _validate_data(d: ComponentData) -> None:
    if len(d.vertex_ids) != len(d.weights):
        raise ComponentDataError("vertex_ids and weights differ in length", "weights")
    if d.base_vertex not in d.vertex_ids:
        raise ComponentDataError("unknown base vertex", "base_vertex")
    if d.order < 4:
        raise ComponentDataError("expansion order must be at least 4", "order")
    h1 = d.B0.shape[0]
    if d.B0.shape != (h1, h1):
        raise ComponentDataError("B0 must be square", "B0")
    if np.max(np.abs(d.B0 - d.B0.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(d.B0), initial=0.0)):
        raise ComponentDataError("B0 is not symmetric", "B0")
    for vid, w in zip(d.vertex_ids, d.weights):
        Bv = d.B_v.get(vid, np.zeros((0, 0)))
        Cv = d.C_v.get(vid, np.zeros((0, h1)))
        if Bv.shape != (w, w):
            raise ComponentDataError(f"expected shape {(w, w)}", f"vertices.{vid}.B_v")
        if Cv.shape != (w, h1):
            raise ComponentDataError(f"expected shape {(w, h1)}", f"vertices.{vid}.C_v")
        if w:
            try:
                validate_siegel(Bv)
            except ThetaError as exc:
                raise ComponentDataError(str(exc), f"vertices.{vid}.B_v") from exc
    w0 = d.weights[d.vertex_ids.index(d.base_vertex)]
    if d.r_base.shape != (d.order, w0):
        raise ComponentDataError(f"expected shape {(d.order, w0)}", "r_base")
    if d.r_trop.shape != (d.order, h1):
        raise ComponentDataError(f"expected shape {(d.order, h1)}", "r_trop")
    if d.q.shape != (d.order, d.order):
        raise ComponentDataError(f"expected shape {(d.order, d.order)}", "q")
    if np.max(np.abs(d.q - d.q.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(d.q), initial=0.0)):
        raise ComponentDataError("q is not symmetric", "q")


def dump_component_data(d: ComponentData) -> dict:
    return {
        "base_vertex": d.base_vertex,
        "order": d.order,
        "vertices": [
            {"id": vid, "genus": w, "B_v": _cx_array(d.B_v.get(vid, np.zeros((w, w)))),
             "C_v": _cx_array(d.C_v.get(vid, np.zeros((w, d.h1))))}
            for vid, w in zip(d.vertex_ids, d.weights)
        ],
        "r_base": _cx_array(d.r_base),
        "q": _cx_array(d.q),
        "r_trop": _cx_array(d.r_trop),
        "B0": _cx_array(d.B0),
        "branch_offsets": np.asarray(d.branch_offsets, dtype=int).tolist(),
    }


def load_component_data(document: str | Mapping) -> ComponentData:
    """Validate and load a ComponentData document (the format written by ``dump_component_data``)."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ComponentDataError(f"malformed JSON: {exc.msg}", f"line {exc.lineno}") from exc
    for key in ("base_vertex", "order", "vertices", "r_base", "q", "r_trop", "B0"):
        if key not in document:
            raise ComponentDataError("missing field", key)
    order = int(document["order"])
    B0_raw = document["B0"]
    h1 = len(B0_raw)
    B0 = _parse_array(B0_raw, (h1, h1), "B0")
    vids, weights, Bv, Cv = [], [], {}, {}
    for i, v in enumerate(document["vertices"]):
        vid = str(v.get("id", i))
        w = int(v.get("genus", 0))
        vids.append(vid)
        weights.append(w)
        Bv[vid] = _parse_array(v.get("B_v", []), (w, w), f"vertices.{vid}.B_v")
        Cv[vid] = _parse_array(v.get("C_v", []), (w, h1), f"vertices.{vid}.C_v")
    base = str(document["base_vertex"])
    if base not in vids:
        raise ComponentDataError("unknown base vertex", "base_vertex")
    w0 = weights[vids.index(base)]
    offsets = np.array(document.get("branch_offsets", np.zeros((h1, h1), dtype=int).tolist()), dtype=np.int64)
    return ComponentData(
        vids, weights, base, order, Bv, Cv,
        _parse_array(document["r_base"], (order, w0), "r_base"),
        _parse_array(document["q"], (order, order), "q"),
        _parse_array(document["r_trop"], (order, h1), "r_trop"),
        B0, offsets.reshape(h1, h1) if offsets.size else np.zeros((h1, h1), dtype=np.int64),
    )


def parse_components(document: str | Mapping) -> tuple[list[MarkedComponent], BasePoint]:
    """Read a component document::

        {"base": {"vertex": "v", "point": "inf", "chart": [a2, ...]},
         "vertices": {"v": {"genus": 0, "nodes": {"e1": "1", "-e1": "-1"}},
                      "w": {"genus": 1, "tau": "1j", "nodes": {...}}}}
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ComponentDataError(f"malformed JSON: {exc.msg}", f"line {exc.lineno}") from exc
    if "vertices" not in document or "base" not in document:
        raise ComponentDataError("missing 'vertices' or 'base'", "$")
    marked = []
    for vid, spec in document["vertices"].items():
        nodes = {str(h): _parse_complex(c, f"vertices.{vid}.nodes.{h}") for h, c in spec.get("nodes", {}).items()}
        tau = spec.get("tau")
        marked.append(MarkedComponent(str(vid), int(spec.get("genus", 0)), nodes,
                                      None if tau is None else _parse_complex(tau, f"vertices.{vid}.tau")))
    b = document["base"]
    point = b.get("point", "inf")
    point = None if point in (None, "inf", "infinity") else _parse_complex(point, "base.point")
    chart = tuple(_parse_complex(a, f"base.chart[{i}]") for i, a in enumerate(b.get("chart", [])))
    return marked, BasePoint(str(b["vertex"]), point, chart)


# ---------------------------------------------------------------------------
# combinatorics of the nodal curve


def _half_edge_vertex(curve: TropicalCurve, h: str) -> str:
    e = curve.edge(h.lstrip("-"))
    return e.head if h.startswith("-") else e.tail


def residues(curve: TropicalCurve, basis: CycleBasis) -> list[dict[str, complex]]:
    """For each cycle ``j`` the residues of its dual differential at the node points."""
    out = []
    for j in range(basis.rank):
        res = {}
        for k, eid in enumerate(basis.edge_ids):
            m = int(basis.matrix[j, k])
            if m:
                res[eid] = m / TWO_PI_I
                res["-" + eid] = -m / TWO_PI_I
        out.append(res)
    return out


def cycle_segments(basis: CycleBasis, curve: TropicalCurve) -> list[list[tuple[str, str, str]]]:
    """For each cycle the list of ``(vertex, entry half-edge, exit half-edge)`` segments."""
    out = []
    for walk in basis.paths:
        halves = [eid if s > 0 else "-" + eid for eid, s in walk]
        segs = []
        for i, h in enumerate(halves):
            entry = h[1:] if h.startswith("-") else "-" + h
            exit_ = halves[(i + 1) % len(halves)]
            segs.append((_half_edge_vertex(curve, entry), entry, exit_))
        out.append(segs)
    return out


# ---------------------------------------------------------------------------
# genus 0


def rational_differential(res: Mapping[str, complex], nodes: Mapping[str, complex]):
    """Callable ``zeta -> sum_h res_h / (zeta - x_h)`` (coefficient of ``d zeta``)."""
    items = [(r, nodes[h]) for h, r in res.items() if h in nodes]

    def f(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return sum(r / (zeta - c) for r, c in items) if items else np.zeros_like(zeta)

    return f


def regularized_log_integral(P: complex, Q: complex, c: complex) -> complex:
    """Regularised integral of ``d zeta / (zeta - c)`` along the straight segment ``P -> Q``."""
    if c == P:
        return cmath.log(Q - P)
    if c == Q:
        return -cmath.log(P - Q)
    ratio = (Q - c) / (P - c)
    if ratio.imag == 0 and ratio.real <= 0:
        raise ComponentDataError("a node lies on a cycle segment; the path is ambiguous")
    return cmath.log(ratio)


def _segment_passes(P, Q, c, eps=1e-12) -> bool:
    d = Q - P
    t = ((c - P) * d.conjugate()).real / abs(d) ** 2
    return 0 < t < 1 and abs(P + t * d - c) < eps * max(1.0, abs(d))


# ---------------------------------------------------------------------------
# genus 1


def _elliptic_reg_integral(P: complex, Q: complex, c: complex, tau: complex, tol: float) -> complex:
    """Regularised integral of ``L(u - c) du`` along the straight segment ``P -> Q`` (quadrature)."""
    d = Q - P
    sing = 0.0j
    at_p, at_q = c == P, c == Q
    if at_p:
        sing = cmath.log(Q - P)
    if at_q:
        sing = -cmath.log(P - Q)

    def integrand(t):
        u = P + t * d
        val = elliptic.log_derivative(u - c, tau).item()
        if at_p:
            val -= 1.0 / (u - P)
        if at_q:
            val -= 1.0 / (u - Q)
        return val * d

    val, err = integrate.quad(integrand, 0.0, 1.0, complex_func=True, epsabs=tol, epsrel=tol, limit=200)
    return val + sing


def _check_torus_node(u: complex, tau: complex, path: str) -> None:
    if not (0 <= u.imag < tau.imag):
        raise ComponentDataError("torus node coordinates need 0 <= Im u < Im tau", path)


def _same_mod_lattice(a: complex, b: complex, tau: complex) -> bool:
    d = a - b
    n = round(d.imag / tau.imag)
    d -= n * tau
    return abs(d - round(d.real)) < 1e-12


# ---------------------------------------------------------------------------
# expansions at the base point


def _chart_series(chart: Sequence[complex], n: int) -> np.ndarray:
    z = np.zeros(n, dtype=complex)
    z[1] = 1
    for k, a in enumerate(chart):
        if k + 2 < n:
            z[k + 2] = a
    return z


def _to_chart(g_w: np.ndarray, chart: Sequence[complex], n: int) -> np.ndarray:
    """Coefficients of ``g(w) dw`` re-expanded as ``h(z) dz``."""
    if not any(chart):
        return g_w[:n]
    W = series.reverse(_chart_series(chart, n + 1), n + 1)
    return series.mul(series.compose(g_w, W, n), series.derivative(W), n)


def chart_q_coefficients(chart: Sequence[complex], order: int) -> np.ndarray:
    """``q_{n,m}`` of the genus-0 base component for ``z = w + a2 w^2 + ...``.

    ``omega^(n) = d(-P_n/n)`` with ``P_n`` the principal part of ``z^{-n}`` in
    the uniformiser ``w``; its regular part in ``z`` gives ``q_{n,m} = m h_m``
    where ``h_m`` is the ``z^m`` coefficient of ``z^{-n} - P_n``.
    """
    q = np.zeros((order, order), dtype=complex)
    if not any(chart):
        return q
    N = 2 * order + 3
    zser = _chart_series(chart, N + 1)
    W = series.reverse(zser, N + 1)
    V = W[1:N + 1]  # W(z) / z
    S_base = zser[1:N + 1]  # z(w) / w
    for n in range(1, order + 1):
        s = series.power(S_base, -n, N)
        for m in range(1, order + 1):
            acc = 0j
            for k in range(n):
                Vp = series.power(V, k - n, N)
                idx = m + n - k
                acc += s[k] * Vp[idx]
            q[n - 1, m - 1] = -m * acc
    return q


def _elliptic_q(tau: complex, order: int) -> np.ndarray:
    """``q_{n,m} = (-1)^n (n+m)! / ((n-1)! (m-1)!) lambda_{n+m}`` from
    ``log vartheta(z) = log(vartheta'(0) z) + sum_k lambda_k z^k``."""
    lam = elliptic.log_taylor(0.0, tau, 2 * order + 1)
    q = np.zeros((order, order), dtype=complex)
    for n in range(1, order + 1):
        for m in range(1, order + 1):
            q[n - 1, m - 1] = ((-1) ** n * math.factorial(n + m)
                               / (math.factorial(n - 1) * math.factorial(m - 1)) * lam[n + m])
    return q


# ---------------------------------------------------------------------------
# assembly


def build_component_data(curve: TropicalCurve, basis: CycleBasis, marked: Sequence[MarkedComponent],
                         base: BasePoint, order: int = 4, quad_tol: float = 1e-12) -> ComponentData:
    """Compute ``B_v``, ``C_v``, ``B0``, ``r`` and ``q`` for components of genus 0 and 1."""
    if order < 4:
        raise ComponentDataError("expansion order must be at least 4", "order")
    by_vertex = {m.vertex: m for m in marked}
    for v in curve.vertices:
        if v.id not in by_vertex:
            raise ComponentDataError("no component data", f"vertices.{v.id}")
        m = by_vertex[v.id]
        if m.genus != v.weight:
            raise ComponentDataError(f"genus {m.genus} does not match weight {v.weight}", f"vertices.{v.id}")
        if m.genus >= 2:
            raise ComponentDataError("genus >= 2 components must be supplied as ComponentData",
                                     f"vertices.{v.id}")
        if m.genus == 1:
            if m.tau is None or m.tau.imag <= 0:
                raise ComponentDataError("Im tau must be positive", f"vertices.{v.id}.tau")
    # every half-edge needs a node point on the right component
    for e in curve.edges:
        for h, vid in ((e.id, e.tail), ("-" + e.id, e.head)):
            if h not in by_vertex[vid].nodes:
                raise ComponentDataError("missing node coordinate", f"vertices.{vid}.nodes.{h}")
    for m in by_vertex.values():
        pts = list(m.nodes.items())
        for i, (h, a) in enumerate(pts):
            if m.genus == 1:
                _check_torus_node(a, m.tau, f"vertices.{m.vertex}.nodes.{h}")
            for h2, b in pts[:i]:
                same = _same_mod_lattice(a, b, m.tau) if m.genus == 1 else a == b
                if same:
                    raise ComponentDataError(f"coincides with node {h2}", f"vertices.{m.vertex}.nodes.{h}")
    if base.vertex not in by_vertex:
        raise ComponentDataError("unknown base vertex", "base.vertex")
    m0 = by_vertex[base.vertex]
    if base.point is None and m0.genus != 0:
        raise ComponentDataError("p = infinity only makes sense on a genus-0 component", "base.point")
    if m0.genus == 1 and any(base.chart):
        raise ComponentDataError("non-trivial charts are supported on genus-0 base components only", "base.chart")
    if base.point is not None:
        for h, a in m0.nodes.items():
            same = _same_mod_lattice(a, base.point, m0.tau) if m0.genus == 1 else a == base.point
            if same:
                raise ComponentDataError(f"base point collides with node {h}", "base.point")

    h1 = basis.rank
    res = residues(curve, basis)
    segs = cycle_segments(basis, curve)

    # B0 and C_v
    B0 = np.zeros((h1, h1), dtype=complex)
    C_v = {v.id: np.zeros((v.weight, h1), dtype=complex) for v in curve.vertices}
    cache: dict[tuple, complex] = {}
    for j in range(h1):
        for vid, entry, exit_ in segs[j]:
            m = by_vertex[vid]
            P, Q = m.nodes[entry], m.nodes[exit_]
            if m.genus == 1:
                C_v[vid][0, j] += Q - P
            for k in range(h1):
                for h, r in res[k].items():
                    if h not in m.nodes:
                        continue
                    c = m.nodes[h]
                    key = (vid, entry, exit_, h)
                    if key not in cache:
                        if m.genus == 0:
                            if c not in (P, Q) and _segment_passes(P, Q, c):
                                raise ComponentDataError("a node lies on a cycle segment; path is ambiguous",
                                                         f"vertices.{vid}")
                            cache[key] = regularized_log_integral(P, Q, c)
                        else:
                            cache[key] = _elliptic_reg_integral(P, Q, c, m.tau, quad_tol)
                    B0[j, k] += r * cache[key]
    asym = B0 - B0.T
    offsets = np.rint(asym.real).astype(np.int64)
    if np.max(np.abs(asym - offsets), initial=0.0) > 1e-8:
        raise ComponentDataError("regularised periods fail reciprocity; inconsistent node data")
    upper = np.triu(B0)
    B0 = upper + np.triu(B0, 1).T

    # expansions at p
    n = order
    r_trop = np.zeros((n, h1), dtype=complex)
    for j in range(h1):
        g_w = np.zeros(n + 1, dtype=complex)
        local = {h: r for h, r in res[j].items() if h in m0.nodes}
        for h, r in local.items():
            c = m0.nodes[h]
            if m0.genus == 0:
                if base.point is None:
                    g_w += -r * c ** np.arange(1, n + 2)
                else:
                    d = c - base.point
                    g_w += -r / d ** np.arange(1, n + 2)
            else:
                g_w += r * elliptic.log_derivative_taylor(base.point - c, m0.tau, n + 1)[:n + 1]
        if m0.genus == 0 and base.point is None and abs(sum(local.values())) > 1e-14:
            raise ComponentDataError("residues on the base component do not sum to zero", "base")
        r_trop[:, j] = _to_chart(g_w, base.chart, n)[:n]

    if m0.genus == 0:
        r_base = np.zeros((n, 0), dtype=complex)
        q = chart_q_coefficients(base.chart, n)
    else:
        r_base = np.zeros((n, 1), dtype=complex)
        r_base[0, 0] = 1.0
        q = _elliptic_q(m0.tau, n)
        q = 0.5 * (q + q.T)

    B_v = {v.id: (np.array([[by_vertex[v.id].tau]], dtype=complex) if v.weight == 1 else np.zeros((0, 0), dtype=complex))
           for v in curve.vertices}
    return ComponentData(curve.vertex_ids, [v.weight for v in curve.vertices], base.vertex, n,
                         B_v, C_v, r_base, q, r_trop, B0, offsets)


def rational_component_data(curve: TropicalCurve, basis: CycleBasis, marked: Sequence[MarkedComponent],
                            base: BasePoint, order: int = 4) -> ComponentData:
    if any(v.weight for v in curve.vertices):
        raise ComponentDataError("all vertex weights must be 0", "vertices")
    return build_component_data(curve, basis, marked, base, order)


def elliptic_component_data(curve: TropicalCurve, basis: CycleBasis, marked: Sequence[MarkedComponent],
                            base: BasePoint, order: int = 4, quad_tol: float = 1e-12) -> ComponentData:
    if any(v.weight > 1 for v in curve.vertices):
        raise ComponentDataError("vertex weights must be 0 or 1", "vertices")
    return build_component_data(curve, basis, marked, base, order, quad_tol)
