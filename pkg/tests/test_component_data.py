import json
import math

import numpy as np
import pytest
from hypothesis import given

from tropkp import elliptic
from tropkp.component_data import (BasePoint, ComponentDataError, MarkedComponent, build_component_data,
                                   chart_q_coefficients, dump_component_data, load_component_data,
                                   parse_components)
from tropkp.graph_core import cycle_basis, parse_tropical_curve
from tropkp.verification import contour_b0, contour_expansions

from conftest import seeds

TWO_PI_I = 2j * math.pi

TWO_LOOPS = {"vertices": [{"id": "v1", "weight": 0}],
             "edges": [{"id": "e1", "tail": "v1", "head": "v1", "length": "1"},
                       {"id": "e2", "tail": "v1", "head": "v1", "length": "1"}]}
ONE_LOOP = {"vertices": [{"id": "v1", "weight": 0}],
            "edges": [{"id": "e1", "tail": "v1", "head": "v1", "length": "1"}]}


def _random_points(rng, k):
    while True:
        pts = rng.uniform(-2, 2, k) + 1j * rng.uniform(-2, 2, k)
        d = np.abs(pts[:, None] - pts[None, :]) + np.eye(k)
        if d.min() > 0.2:
            return pts


def _build(curve_doc, nodes, point=None, chart=(), order=4):
    curve = parse_tropical_curve(curve_doc)
    basis = cycle_basis(curve)
    marked = [MarkedComponent("v1", 0, nodes)]
    return curve, basis, build_component_data(curve, basis, marked, BasePoint("v1", point, chart), order)


def _mod1(x):
    return abs(x - round(x.real))


def test_single_loop_values(single_loop):
    d = single_loop.data
    # nodes 1 and -1: exp(2 pi i B0) = -1 / (1 - (-1))^2
    assert d.B0[0, 0] * TWO_PI_I == pytest.approx(-math.log(4) - 1j * math.pi)
    assert np.allclose(d.r_trop[:, 0] * TWO_PI_I, [-2, 0, -2, 0])
    assert np.all(d.q == 0)
    assert d.genus == 1 and d.h1 == 1


def test_two_loop_offdiagonal_is_log_cross_ratio(two_loop):
    # nodes e1: 1, -1 and e2: 2, 3
    cr = (1 - 2) * (-1 - 3) / ((1 - 3) * (-1 - 2))
    assert two_loop.data.B0[0, 1] * TWO_PI_I == pytest.approx(math.log(cr))


@given(seeds)
def test_rational_b0_closed_form(seed):
    rng = np.random.default_rng(seed)
    k1, l1, k2, l2 = _random_points(rng, 4)
    nodes = {"e1": k1, "-e1": l1, "e2": k2, "-e2": l2}
    try:
        _, _, d = _build(TWO_LOOPS, nodes)
    except ComponentDataError:
        return  # a node on a cycle segment
    for j, (k, l) in enumerate([(k1, l1), (k2, l2)]):
        assert abs(np.exp(TWO_PI_I * d.B0[j, j]) * (-(k - l) ** 2) - 1) < 1e-10
    cr = (k1 - k2) * (l1 - l2) / ((k1 - l2) * (l1 - k2))
    assert _mod1(d.B0[0, 1] - np.log(cr) / TWO_PI_I) < 1e-10


@given(seeds)
def test_r_trop_closed_form(seed):
    rng = np.random.default_rng(seed)
    k, l, p = _random_points(rng, 3)
    m = np.arange(1, 5)
    _, _, d = _build(ONE_LOOP, {"e1": k, "-e1": l})
    assert np.allclose(d.r_trop[:, 0], (l ** m - k ** m) / TWO_PI_I, atol=1e-12)
    _, _, d = _build(ONE_LOOP, {"e1": k, "-e1": l}, point=p)
    expected = (-1.0) ** (m - 1) * ((p - k) ** (-m) - (p - l) ** (-m)) / TWO_PI_I
    assert np.allclose(d.r_trop[:, 0], expected, atol=1e-10)


def test_contour_oracle_agrees_on_fixed_case():
    nodes = {"e1": 0.3 + 1j, "-e1": -1.2 + 0.1j, "e2": 1.5 - 0.4j, "-e2": 0.2 - 1.7j}
    curve, basis, d = _build(TWO_LOOPS, nodes, point=0.5 + 0.5j, chart=(0.2 - 0.1j, 0.05j))
    full = contour_b0(curve, basis, nodes)
    assert np.allclose(np.triu(full), np.triu(d.B0), atol=1e-10)
    r, q = contour_expansions(basis, curve, nodes, BasePoint("v1", 0.5 + 0.5j, (0.2 - 0.1j, 0.05j)), 4)
    assert np.allclose(r, d.r_trop, atol=1e-9)
    assert np.allclose(q, d.q, atol=1e-8)
    assert np.abs(d.q).max() > 1e-3


@given(seeds)
def test_chart_q_symmetric(seed):
    rng = np.random.default_rng(seed)
    chart = tuple(rng.uniform(-1, 1, 3) + 1j * rng.uniform(-1, 1, 3))
    q = chart_q_coefficients(chart, 5)
    assert np.allclose(q, q.T, atol=1e-9 * max(1, np.abs(q).max()))


def test_quadratic_chart_q11():
    # z = w + a w^2 gives 1/w = 1/z + a - a^2 z + ..., so d(-1/w) = (1/z^2 + a^2) dz
    a = 0.3
    q = chart_q_coefficients((a,), 4)
    assert q[0, 0] == pytest.approx(a ** 2)


def test_trivial_chart_has_zero_q():
    assert np.all(chart_q_coefficients((), 4) == 0)


def test_elliptic_values(elliptic_loop):
    d = elliptic_loop.data
    k, l = 0.4 + 0.3j, 0.1 + 0.2j
    assert np.allclose(d.B_v["v1"], [[1j]])
    assert np.allclose(d.C_v["v1"], [[k - l]])
    prime = elliptic.odd_theta(k - l, 1j) / elliptic.odd_theta(0, 1j, derivative=1)
    assert abs(np.exp(TWO_PI_I * d.B0[0, 0]) * prime ** 2 + 1) < 1e-10
    # eta_1 of the square torus
    assert d.q[0, 0] == pytest.approx(math.pi)
    assert np.allclose(d.q, d.q.T)
    assert abs(d.q[0, 1]) < 1e-12 and abs(d.q[1, 2]) < 1e-12


def test_dump_load_roundtrip(theta_graph, elliptic_loop):
    for ex in (theta_graph, elliptic_loop):
        doc = json.dumps(dump_component_data(ex.data))
        back = load_component_data(doc)
        assert np.allclose(back.B0, ex.data.B0)
        assert np.allclose(back.q, ex.data.q)
        assert np.allclose(back.r_trop, ex.data.r_trop)
        assert np.array_equal(back.branch_offsets, ex.data.branch_offsets)
        assert back.vertex_ids == ex.data.vertex_ids


def test_stacked_r_layout(elliptic_loop):
    d = elliptic_loop.data
    r = d.stacked_r()
    assert r.shape == (4, 2)
    assert np.allclose(r[:, 0], d.r_base[:, 0])
    assert np.allclose(r[:, 1], d.r_trop[:, 0])


def test_node_on_segment_rejected():
    with pytest.raises(ComponentDataError, match="segment"):
        _build(TWO_LOOPS, {"e1": 1, "-e1": -1, "e2": 0, "-e2": 5})


def _doc(**over):
    doc = {"base": {"vertex": "v1", "point": "inf"},
           "vertices": {"v1": {"genus": 0, "nodes": {"e1": [1, 0], "-e1": [-1, 0]}}}}
    doc["vertices"]["v1"].update(over)
    return doc


def test_parse_reports_path():
    with pytest.raises(ComponentDataError) as err:
        parse_components(_doc(nodes={"e1": "abc", "-e1": 1}))
    assert err.value.path == "vertices.v1.nodes.e1"
    with pytest.raises(ComponentDataError) as err:
        parse_components("{not json")
    assert err.value.path.startswith("line")
    with pytest.raises(ComponentDataError):
        parse_components({"vertices": {}})


@pytest.mark.parametrize("doc, path", [
    (_doc(nodes={"e1": [1, 0]}), "vertices.v1.nodes.-e1"),
    (_doc(genus=1, tau=[0, 1]), "vertices.v1"),
    (_doc(nodes={"e1": [1, 0], "-e1": [1, 0]}), "vertices.v1.nodes"),
])
def test_build_errors(doc, path):
    curve = parse_tropical_curve(ONE_LOOP)
    marked, base = parse_components(doc)
    with pytest.raises(ComponentDataError) as err:
        build_component_data(curve, cycle_basis(curve), marked, base)
    assert err.value.path.startswith(path)


def test_base_point_collision_and_order():
    with pytest.raises(ComponentDataError, match="collides"):
        _build(ONE_LOOP, {"e1": 1, "-e1": -1}, point=1)
    with pytest.raises(ComponentDataError, match="order"):
        _build(ONE_LOOP, {"e1": 1, "-e1": -1}, order=3)


def test_elliptic_tau_validation():
    curve = parse_tropical_curve({"vertices": [{"id": "v1", "weight": 1}],
                                  "edges": [{"id": "e1", "tail": "v1", "head": "v1", "length": "1"}]})
    marked = [MarkedComponent("v1", 1, {"e1": 0.1, "-e1": 0.2}, tau=-1j)]
    with pytest.raises(ComponentDataError, match="tau"):
        build_component_data(curve, cycle_basis(curve), marked, BasePoint("v1", 0.5 + 0.5j))
    marked = [MarkedComponent("v1", 1, {"e1": 0.1, "-e1": 0.2}, tau=1j)]
    with pytest.raises(ComponentDataError, match="infinity"):
        build_component_data(curve, cycle_basis(curve), marked, BasePoint("v1", None))
