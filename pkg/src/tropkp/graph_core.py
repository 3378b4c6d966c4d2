"""Tropical curves: weighted metric multigraphs and their cycle lattices.

A curve is stored edge-by-edge (not by endpoint pairs) so that self-loops and
parallel edges need no special casing.  Every edge carries a fixed orientation
``tail -> head``; the half-edge ``e`` starts at the tail and ``-e`` starts at
the head.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

__all__ = [
    "CurveError",
    "Vertex",
    "Edge",
    "TropicalCurve",
    "CycleBasis",
    "parse_tropical_curve",
    "serialize_curve",
    "genus",
    "cycle_basis",
    "incidence_matrix",
    "natural_key",
]


class CurveError(ValueError):
    """Invalid curve document or curve data.  ``path`` names the offending element."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


def natural_key(ident: str):
    """Sort key that orders ``e2`` before ``e10``."""
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok)
            for tok in re.findall(r"\d+|\D+", ident)]


@dataclass(frozen=True)
class Vertex:
    id: str
    weight: int = 0


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str
    length: Fraction

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass(frozen=True)
class TropicalCurve:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        _validate(self)

    @property
    def vertex_ids(self) -> list[str]:
        return [v.id for v in self.vertices]

    @property
    def edge_ids(self) -> list[str]:
        return [e.id for e in self.edges]

    @property
    def lengths(self) -> dict[str, Fraction]:
        return {e.id: e.length for e in self.edges}

    def vertex(self, vid: str) -> Vertex:
        for v in self.vertices:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.id == eid:
                return e
        raise KeyError(eid)

    def with_lengths(self, lengths: dict[str, Any]) -> "TropicalCurve":
        """Same graph and weights, new length function."""
        edges = tuple(Edge(e.id, e.tail, e.head, _as_fraction(lengths[e.id], f"edges[{e.id}].length"))
                      for e in self.edges)
        return TropicalCurve(self.vertices, edges)


def _as_fraction(value: Any, path: str) -> Fraction:
    if isinstance(value, bool):
        raise CurveError("length must be a rational number", path)
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise CurveError(f"cannot parse {value!r} as a rational", path) from exc
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(p, int) for p in value):
        if value[1] == 0:
            raise CurveError("zero denominator", path)
        return Fraction(value[0], value[1])
    if isinstance(value, float):
        # JSON numbers: take the shortest decimal repr, not the binary expansion
        return Fraction(repr(value))
    raise CurveError(f"unsupported length value {value!r}", path)


def _validate(curve: TropicalCurve) -> None:
    ids = set()
    for i, v in enumerate(curve.vertices):
        if not isinstance(v.id, str) or not v.id:
            raise CurveError("vertex id must be a nonempty string", f"vertices[{i}]")
        if v.id in ids:
            raise CurveError("duplicate vertex id", f"vertices[{v.id}]")
        if isinstance(v.weight, bool) or not isinstance(v.weight, int):
            raise CurveError("weight must be an integer", f"vertices[{v.id}].weight")
        if v.weight < 0:
            raise CurveError("negative weight", f"vertices[{v.id}].weight")
        ids.add(v.id)
    if not ids:
        raise CurveError("curve has no vertices", "vertices")
    eids = set()
    for e in curve.edges:
        if not isinstance(e.id, str) or not e.id or e.id.startswith("-"):
            raise CurveError("edge id must be a nonempty string not starting with '-'", f"edges[{e.id}]")
        if e.id in eids:
            raise CurveError("duplicate edge id", f"edges[{e.id}]")
        eids.add(e.id)
        for end in ("tail", "head"):
            if getattr(e, end) not in ids:
                raise CurveError(f"unknown vertex {getattr(e, end)!r}", f"edges[{e.id}].{end}")
        if not isinstance(e.length, Fraction):
            raise CurveError("length must be a Fraction", f"edges[{e.id}].length")
        if e.length <= 0:
            raise CurveError("length must be positive", f"edges[{e.id}].length")
    # connectivity
    adj: dict[str, set[str]] = {vid: set() for vid in ids}
    for e in curve.edges:
        adj[e.tail].add(e.head)
        adj[e.head].add(e.tail)
    start = curve.vertices[0].id
    seen = {start}
    todo = [start]
    while todo:
        for w in adj[todo.pop()]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    missing = sorted(ids - seen, key=natural_key)
    if missing:
        raise CurveError("graph is disconnected", f"vertices[{missing[0]}]")


def parse_tropical_curve(document: str | dict) -> TropicalCurve:
    """Build a validated curve from a JSON string or an already-decoded dict.

    Lengths may be ``"p/q"`` strings, integer strings, decimal strings
    (converted exactly) or ``[p, q]`` integer pairs.
    """
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CurveError(f"malformed JSON: {exc.msg}", f"line {exc.lineno}") from exc
    if not isinstance(document, dict):
        raise CurveError("document must be an object", "$")
    for key in ("vertices", "edges"):
        if key not in document or not isinstance(document[key], list):
            raise CurveError("missing or non-list field", key)
    vertices = []
    for i, v in enumerate(document["vertices"]):
        if not isinstance(v, dict) or "id" not in v:
            raise CurveError("vertex must be an object with an id", f"vertices[{i}]")
        vid = str(v["id"])
        w = v.get("weight", 0)
        if isinstance(w, str) and re.fullmatch(r"\d+", w.strip()):
            w = int(w)
        vertices.append(Vertex(vid, w))
    edges = []
    for i, e in enumerate(document["edges"]):
        if not isinstance(e, dict):
            raise CurveError("edge must be an object", f"edges[{i}]")
        for key in ("id", "tail", "head", "length"):
            if key not in e:
                raise CurveError("missing field", f"edges[{e.get('id', i)}].{key}")
        eid = str(e["id"])
        edges.append(Edge(eid, str(e["tail"]), str(e["head"]),
                          _as_fraction(e["length"], f"edges[{eid}].length")))
    return TropicalCurve(tuple(vertices), tuple(edges))


def _fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def serialize_curve(curve: TropicalCurve) -> dict:
    return {
        "vertices": [{"id": v.id, "weight": v.weight} for v in curve.vertices],
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head, "length": _fraction_str(e.length)}
                  for e in curve.edges],
    }


def genus(curve: TropicalCurve) -> tuple[int, int]:
    """Return ``(h1, g)``: first Betti number of the graph and the arithmetic genus."""
    h1 = len(curve.edges) - len(curve.vertices) + 1
    return h1, h1 + sum(v.weight for v in curve.vertices)


def incidence_matrix(curve: TropicalCurve) -> np.ndarray:
    """Signed |V| x |E| incidence matrix: +1 at the tail, -1 at the head, 0 for loops."""
    vindex = {vid: i for i, vid in enumerate(curve.vertex_ids)}
    inc = np.zeros((len(curve.vertices), len(curve.edges)), dtype=np.int64)
    for j, e in enumerate(curve.edges):
        inc[vindex[e.tail], j] += 1
        inc[vindex[e.head], j] -= 1
    return inc


@dataclass(frozen=True)
class CycleBasis:
    """Fundamental cycles of a spanning tree.

    ``matrix[j, k]`` is the signed number of times cycle ``j`` traverses edge
    ``edge_ids[k]``.  ``paths[j]`` lists the same cycle as a closed walk of
    oriented crossings ``(edge id, +1 | -1)``; crossing ``(e, +1)`` leaves the
    tail through half-edge ``e`` and enters the head through ``-e``.
    """

    edge_ids: tuple[str, ...]
    tree: frozenset[str]
    matrix: np.ndarray = field(compare=False)
    paths: tuple[tuple[tuple[str, int], ...], ...]
    chords: tuple[str, ...]

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    def __eq__(self, other):
        return (isinstance(other, CycleBasis) and self.edge_ids == other.edge_ids
                and self.tree == other.tree and self.paths == other.paths
                and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.edge_ids, self.tree, self.paths))


def cycle_basis(curve: TropicalCurve) -> CycleBasis:
    """Deterministic fundamental-cycle basis.

    The spanning tree is grown breadth-first from the smallest vertex id,
    scanning incident edges in increasing (natural) id order.  Each non-tree
    edge ``e`` gives one cycle: ``e`` traversed along its orientation, then the
    tree path back.  Rows are ordered by the id of their chord, and the chord
    entry is always ``+1``.
    """
    vids = sorted(curve.vertex_ids, key=natural_key)
    edges = sorted(curve.edges, key=lambda e: natural_key(e.id))
    incident: dict[str, list] = {v: [] for v in vids}
    for e in edges:
        incident[e.tail].append(e)
        if not e.is_loop:
            incident[e.head].append(e)
    root = vids[0]
    parent: dict[str, tuple[str, Edge] | None] = {root: None}
    tree = set()
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for e in incident[v]:
            w = e.head if e.tail == v else e.tail
            if w not in parent:
                parent[w] = (v, e)
                tree.add(e.id)
                queue.append(w)

    def path_to_root(v: str) -> list[tuple[str, int]]:
        # crossings that walk from v up to the root
        steps = []
        while parent[v] is not None:
            p, e = parent[v]
            steps.append((e.id, +1 if e.tail == v else -1))
            v = p
        return steps

    def tree_walk(a: str, b: str) -> list[tuple[str, int]]:
        up_a = path_to_root(a)
        up_b = path_to_root(b)
        # strip the common tail above the meeting point
        while up_a and up_b and up_a[-1] == up_b[-1]:
            up_a.pop()
            up_b.pop()
        return up_a + [(eid, -s) for eid, s in reversed(up_b)]

    eindex = {eid: k for k, eid in enumerate(curve.edge_ids)}
    chords = [e for e in edges if e.id not in tree]
    mat = np.zeros((len(chords), len(curve.edges)), dtype=np.int64)
    paths = []
    for j, e in enumerate(chords):
        walk = [(e.id, +1)] + (tree_walk(e.head, e.tail) if not e.is_loop else [])
        for eid, s in walk:
            mat[j, eindex[eid]] += s
        paths.append(tuple(walk))
    return CycleBasis(tuple(curve.edge_ids), frozenset(tree), mat, tuple(paths),
                      tuple(e.id for e in chords))
