import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from conftest import curve_from_seed, seeds
from tropkp.graph_core import (CurveError, Edge, TropicalCurve, Vertex, cycle_basis, genus, incidence_matrix,
                               natural_key, parse_tropical_curve, serialize_curve)

LOOP = {"vertices": [{"id": "v1"}], "edges": [{"id": "e1", "tail": "v1", "head": "v1", "length": "2"}]}
THETA = {"vertices": [{"id": "v1"}, {"id": "v2"}],
         "edges": [{"id": f"e{i}", "tail": "v1", "head": "v2", "length": str(i)} for i in (1, 2, 3)]}


def test_single_loop_genus():
    curve = parse_tropical_curve(LOOP)
    assert genus(curve) == (1, 1)


def test_weights_add_to_genus():
    doc = json.loads(json.dumps(LOOP))
    doc["vertices"][0]["weight"] = 2
    assert genus(parse_tropical_curve(doc)) == (1, 3)


def test_theta_graph_basis():
    basis = cycle_basis(parse_tropical_curve(THETA))
    assert basis.tree == frozenset({"e1"})
    assert basis.chords == ("e2", "e3")
    assert basis.matrix.tolist() == [[-1, 1, 0], [-1, 0, 1]]
    assert basis.paths == ((("e2", 1), ("e1", -1)), (("e3", 1), ("e1", -1)))


def test_tree_has_no_cycles():
    basis = cycle_basis(parse_tropical_curve({"vertices": [{"id": "a"}, {"id": "b"}],
                                              "edges": [{"id": "e1", "tail": "a", "head": "b", "length": 1}]}))
    assert basis.rank == 0


def test_parse_from_string_and_lengths():
    doc = json.dumps({"vertices": [{"id": "v"}],
                      "edges": [{"id": "a", "tail": "v", "head": "v", "length": "3/4"},
                                {"id": "b", "tail": "v", "head": "v", "length": 0.1},
                                {"id": "c", "tail": "v", "head": "v", "length": [5, 3]}]})
    curve = parse_tropical_curve(doc)
    assert curve.lengths == {"a": Fraction(3, 4), "b": Fraction(1, 10), "c": Fraction(5, 3)}


def test_serialize_round_trip():
    curve = parse_tropical_curve(THETA)
    assert parse_tropical_curve(serialize_curve(curve)) == curve


def test_natural_order():
    assert sorted(["e10", "e2", "e1"], key=natural_key) == ["e1", "e2", "e10"]


def test_incidence_loop_is_zero():
    curve = parse_tropical_curve(LOOP)
    assert incidence_matrix(curve).tolist() == [[0]]


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["edges"][0].update(length="-1"), "edges[e1].length"),
    (lambda d: d["edges"][0].update(length="0"), "edges[e1].length"),
    (lambda d: d["edges"][0].update(tail="nope"), "edges[e1].tail"),
    (lambda d: d["edges"][0].pop("head"), "edges[e1].head"),
    (lambda d: d["vertices"].append({"id": "v1"}), "vertices[v1]"),
    (lambda d: d["vertices"][0].update(weight=-1), "vertices[v1].weight"),
    (lambda d: d["vertices"].append({"id": "v9"}), "vertices[v9]"),
    (lambda d: d["edges"][0].update(length="x/y"), "edges[e1].length"),
])
def test_invalid_documents_name_the_field(mutate, path):
    doc = json.loads(json.dumps(LOOP))
    mutate(doc)
    with pytest.raises(CurveError) as info:
        parse_tropical_curve(doc)
    assert info.value.path == path


def test_malformed_json():
    with pytest.raises(CurveError):
        parse_tropical_curve("{not json")


def test_with_lengths():
    curve = parse_tropical_curve(THETA).with_lengths({"e1": 5, "e2": "1/2", "e3": 1})
    assert curve.lengths["e2"] == Fraction(1, 2)


@given(seeds)
def test_basis_rank_and_closed_cycles(seed):
    curve = curve_from_seed(seed)
    basis = cycle_basis(curve)
    h1, _ = genus(curve)
    assert basis.rank == h1
    # every cycle has zero boundary
    assert not np.any(basis.matrix @ incidence_matrix(curve).T)
    if h1:
        assert np.linalg.matrix_rank(basis.matrix) == h1


@given(seeds)
def test_paths_match_matrix(seed):
    curve = curve_from_seed(seed)
    basis = cycle_basis(curve)
    index = {eid: k for k, eid in enumerate(basis.edge_ids)}
    for j, walk in enumerate(basis.paths):
        row = np.zeros(len(index), dtype=int)
        for eid, s in walk:
            row[index[eid]] += s
        assert row.tolist() == basis.matrix[j].tolist()
        assert walk[0] == (basis.chords[j], 1)


@given(seeds)
def test_basis_is_deterministic_under_reordering(seed):
    curve = curve_from_seed(seed)
    shuffled = TropicalCurve(tuple(reversed(curve.vertices)), tuple(reversed(curve.edges)))
    a, b = cycle_basis(curve), cycle_basis(shuffled)
    assert a.tree == b.tree and a.chords == b.chords and a.paths == b.paths


def test_direct_construction_validates():
    with pytest.raises(CurveError):
        TropicalCurve((Vertex("a"), Vertex("b")), (Edge("e1", "a", "a", Fraction(1)),))
