import math

import numpy as np
import pytest
from hypothesis import given, settings

from tropkp.bundled import example_from_document
from tropkp.tau_kp import (ExpSum, TauError, TauSpec, grid_points, kp_residual, parse_grid, tau_component,
                           tau_expsum, tau_family, tau_limit, u_from_tau, u_grid, wavefunction_coeffs)
from tropkp.tropical_theta import maximal_forms_at

from conftest import seeds

SMALL = "x:-1:1:5,t2:-1:1:5,t3:-1:1:5"


def _one_soliton(t1, t3):
    # nodes 1, -1 and c = 1/4: tau = 1 + exp(phi) / 2 with phi = -2 t1 - 2 t3
    return 1 + 0.5 * np.exp(-2 * t1 - 2 * t3)


def test_one_soliton_tau_closed_form(single_loop):
    spec = single_loop.spec()
    for t in ([0, 0, 0], [0.3, -0.7, 0.2], [-1.1, 0.4, 0.9, 0.3]):
        t = t + [0] * (4 - len(t))
        assert tau_limit(spec, t) == pytest.approx(_one_soliton(t[0], t[2]))


def test_one_soliton_u_profile_and_peak(single_loop):
    spec = single_loop.spec()
    x = np.linspace(-3, 3, 61)
    u = u_from_tau(spec, x, 0.0, 0.2)
    e = 0.5 * np.exp(-2 * x - 0.4)
    assert np.allclose(u, 4 * e / (1 + e) ** 2, atol=1e-12)
    # peak (kappa - lambda)^2 / 4 = 1 sits where e = 1
    x0 = (math.log(0.5) - 0.4) / 2
    assert u_from_tau(spec, x0, 0.0, 0.2).real == pytest.approx(1.0, abs=1e-12)


def test_u_is_real_on_real_grid(single_loop, two_loop):
    for ex in (single_loop, two_loop):
        _, u, ok = u_grid(ex.spec(), parse_grid(SMALL))
        assert ok.all()
        assert np.max(np.abs(u.imag)) < 1e-12


def test_tree_gives_trivial_tau():
    doc = {"curve": {"vertices": [{"id": "a", "weight": 0}, {"id": "b", "weight": 0}],
                     "edges": [{"id": "e1", "tail": "a", "head": "b", "length": "1"}]},
           "components": {"base": {"vertex": "a", "point": "inf"},
                          "vertices": {"a": {"genus": 0, "nodes": {"e1": [1, 0]}},
                                       "b": {"genus": 0, "nodes": {"-e1": [0, 0]}}}}}
    spec = example_from_document(doc).spec()
    assert tau_limit(spec, [0.3, 0.1, 0.2]) == 1
    rep = kp_residual(spec, SMALL)
    assert rep.max_residual == 0 and rep.scale == 0


def test_wavefunction_one_soliton(single_loop):
    # tau(t - [a]) / tau(t) = (1 + E (1 + a) / (1 - a)) / (1 + E) with E = exp(phi) / 2
    spec = single_loop.spec()
    t = np.array([0.2, -0.3, 0.1, 0.0])
    E = 0.5 * np.exp(-2 * t[0] - 2 * t[2])
    w = wavefunction_coeffs(spec, t, 4)
    assert np.allclose(w, 2 * E / (1 + E), atol=1e-12)
    h = 1e-5
    dlog = (np.log(tau_limit(spec, t + [h, 0, 0, 0])) - np.log(tau_limit(spec, t - [h, 0, 0, 0]))) / (2 * h)
    assert w[0] == pytest.approx(-dlog, abs=1e-8)


def test_wavefunction_elliptic_first_coefficient(elliptic_loop):
    spec = elliptic_loop.spec()
    t = np.array([0.1, 0.2, -0.1, 0.0])
    h = 1e-5
    dlog = (np.log(tau_limit(spec, t + [h, 0, 0, 0])) - np.log(tau_limit(spec, t - [h, 0, 0, 0]))) / (2 * h)
    assert wavefunction_coeffs(spec, t, 3)[0] == pytest.approx(-dlog, abs=1e-7)


def test_gauge_factor_leaves_u_unchanged(two_loop):
    t = grid_points(parse_grid(SMALL))
    t4 = np.column_stack([t, np.zeros(len(t))]).astype(complex)
    es = tau_expsum(two_loop.spec(), t4)
    gauged = ExpSum(es.log_amp + 0.7 - 0.2j, es.rates + np.array([1.3, 0, 0, 0]), es.Q)
    a, _ = es.log_taylor(t4)
    b, _ = gauged.log_taylor(t4)
    for mi in [(2, 0, 0), (3, 0, 1), (2, 2, 0), (6, 0, 0)]:
        assert np.allclose(a.derivative_at_zero(mi), b.derivative_at_zero(mi), atol=1e-10)
    assert np.allclose(b.derivative_at_zero((1, 0, 0)) - a.derivative_at_zero((1, 0, 0)), 1.3)


def test_component_taus_sum_to_limit(two_loop, theta_graph):
    rng = np.random.default_rng(3)
    for ex in (two_loop, theta_graph):
        lengths = {e.id: e.length for e in ex.curve.edges}
        forms = maximal_forms_at(ex.B_sym, lengths, ex.alpha)
        assert forms
        for _ in range(5):
            t = rng.uniform(-1, 1, 4)
            total = sum(tau_component(ex.spec("component", form=f), t) for f in forms)
            assert total == pytest.approx(tau_limit(ex.spec(), t), rel=1e-12)


def test_component_taus_solve_kp(two_loop):
    lengths = {e.id: e.length for e in two_loop.curve.edges}
    for f in maximal_forms_at(two_loop.B_sym, lengths, two_loop.alpha):
        assert kp_residual(two_loop.spec("component", form=f), SMALL).relative_residual < 1e-8


def test_soliton_residuals_and_fd_agreement(single_loop, two_loop, theta_graph):
    for ex, bound in ((single_loop, 1e-10), (two_loop, 1e-8), (theta_graph, 1e-8)):
        rep = kp_residual(ex.spec(), SMALL)
        assert rep.relative_residual < bound
        assert rep.fd_max_rel_diff < 1e-6
        assert rep.npoints == 125


def test_mixed_residual(elliptic_loop):
    rep = kp_residual(elliptic_loop.spec(), SMALL)
    assert rep.relative_residual < 1e-6
    assert rep.flagged == 0


def test_corrupted_data_fails_kp(two_loop):
    spec = two_loop.spec()
    B0 = spec.data.B0.copy()
    B0[0, 1] += 0.3
    B0[1, 0] += 0.3
    from dataclasses import replace
    bad = TauSpec(replace(spec.data, B0=B0), spec.family, spec.alpha, spec.c)
    assert kp_residual(bad, SMALL).relative_residual > 1e-2


@pytest.mark.parametrize("name", ["two_loop", "elliptic_loop"])
def test_regularized_family_tends_to_limit(name, request):
    ex = request.getfixturevalue(name)
    rng = np.random.default_rng(11)
    lim = ex.spec()
    errs = {}
    for s in (1e-3, 1e-5):
        fam = ex.spec("family", s=s, regularized=True)
        worst = 0.0
        for _ in range(5):
            t = np.concatenate([rng.uniform(-0.5, 0.5, 3), [0]])
            a, b = tau_family(fam, t), tau_limit(lim, t)
            worst = max(worst, abs(a - b) / abs(b))
        errs[s] = worst
    assert errs[1e-5] < errs[1e-3]
    assert errs[1e-5] < 1e-5


def test_unregularized_family_is_a_theta_function(single_loop):
    spec = single_loop.spec("family", s=0.2)
    from tropkp.riemann_theta import theta
    t = np.array([0.1, 0.2, -0.3, 0.0])
    R = spec.data.stacked_r()[:4]
    z = spec.c + t @ R
    assert tau_family(spec, t) == pytest.approx(theta(spec.family.Z(0.2), z).value)


def test_kind_mismatch(single_loop):
    with pytest.raises(TauError):
        tau_family(single_loop.spec(), [0, 0, 0])
    with pytest.raises(TauError):
        tau_limit(single_loop.spec("family", s=0.1), [0, 0, 0])
    with pytest.raises(TauError):
        tau_limit(single_loop.spec(), [0, 0, 0, 0, 0])


@pytest.mark.parametrize("kw", [
    {"kind": "bogus"},
    {"times": 2},
    {"times": 5},
    {"alpha": ["1/2", "1/2"]},
    {"c": [0, 0]},
    {"kind": "family"},
    {"kind": "family", "s": 1.5},
    {"kind": "component"},
])
def test_spec_validation(single_loop, kw):
    kind = kw.pop("kind", "limit")
    with pytest.raises(TauError):
        single_loop.spec(kind, **kw)


@pytest.mark.parametrize("text", ["x:0:1", "y:0:1:3", "x:0:1:1", "x:1:0:3"])
def test_parse_grid_errors(text):
    with pytest.raises(ValueError):
        parse_grid(text)


def test_parse_grid_default_and_override():
    g = parse_grid(None)
    assert g == {"x": (-2.0, 2.0, 11), "t2": (-2.0, 2.0, 11), "t3": (-2.0, 2.0, 11)}
    assert parse_grid("t3:0:1:2")["t3"] == (0.0, 1.0, 2)


@settings(max_examples=10)
@given(seeds)
def test_random_rational_limit_tau_solves_kp(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.5, 1.5, 4) + 1j * rng.uniform(-1.5, 1.5, 4)
    if np.min(np.abs(pts[:, None] - pts[None, :]) + np.eye(4)) < 0.3:
        return
    doc = {"curve": {"vertices": [{"id": "v1", "weight": 0}],
                     "edges": [{"id": "e1", "tail": "v1", "head": "v1", "length": str(int(rng.integers(1, 4)))},
                               {"id": "e2", "tail": "v1", "head": "v1", "length": str(int(rng.integers(1, 4)))}]},
           "components": {"base": {"vertex": "v1", "point": "inf"},
                          "vertices": {"v1": {"genus": 0, "nodes": {
                              h: [p.real, p.imag] for h, p in zip(["e1", "-e1", "e2", "-e2"], pts)}}}},
           "alpha": ["1/2", "1/2"],
           "c": [[float(v), 0] for v in rng.uniform(-0.5, 0.5, 2)]}
    try:
        ex = example_from_document(doc)
    except ValueError:
        return
    rep = kp_residual(ex.spec(), "x:-0.5:0.5:4,t2:-0.5:0.5:4,t3:-0.5:0.5:4", fd_samples=0)
    if rep.scale > 0:
        assert rep.relative_residual < 1e-7
