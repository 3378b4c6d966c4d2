import numpy as np
import pytest
from hypothesis import given, strategies as st

from tropkp import series
from tropkp.series import MultiSeries, monomials

coeffs = st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                  min_size=6, max_size=6)


def _unit(a):
    a = np.asarray(a, dtype=complex)
    a[0] = 1.0 + a[0] * 0.1
    return a


def test_exp_of_x_is_exponential_series():
    x = np.array([0, 1, 0, 0, 0, 0], dtype=complex)
    from math import factorial
    assert np.allclose(series.exp(x), [1 / factorial(k) for k in range(6)])


def test_log_of_one_plus_x():
    a = np.array([1, 1, 0, 0, 0, 0], dtype=complex)
    assert np.allclose(series.log(a), [0, 1, -1 / 2, 1 / 3, -1 / 4, 1 / 5])


@given(coeffs)
def test_exp_log_roundtrip(a):
    a = _unit(a)
    assert np.allclose(series.exp(series.log(a)), a, atol=1e-9)


@given(coeffs)
def test_inverse_times_series_is_one(a):
    a = _unit(a)
    one = series.mul(a, series.inv(a))
    assert np.allclose(one, np.eye(1, 6)[0], atol=1e-10)


def test_inverse_of_zero_constant_raises():
    with pytest.raises(ZeroDivisionError):
        series.inv([0, 1, 2])


@given(coeffs)
def test_reverse_composes_to_identity(a):
    g = np.asarray(a, dtype=complex)
    g[0] = 0
    g[1] = 1 + 0.1 * g[1]
    h = series.reverse(g)
    ident = np.eye(1, 6, 1)[0]
    assert np.allclose(series.compose(g, h), ident, atol=1e-8)
    assert np.allclose(series.compose(h, g), ident, atol=1e-8)


def test_power_matches_repeated_product():
    a = np.array([1, 2, -1, 0.5, 0, 3], dtype=complex)
    assert np.allclose(series.power(a, 3), series.mul(series.mul(a, a), a))
    assert np.allclose(series.mul(series.power(a, -2), series.power(a, 2)), np.eye(1, 6)[0])


def test_compose_requires_vanishing_inner():
    with pytest.raises(ValueError):
        series.compose([1, 1], [1, 1])


def test_monomial_count():
    from math import comb
    assert len(monomials(3, 6)) == comb(9, 3)
    assert monomials(2, 1) == [(0, 0), (0, 1), (1, 0)]


def test_multiseries_log_matches_closed_form():
    # f = 2 * exp(x + 2y - z) * (1 + x*y); log f = log 2 + x + 2y - z + log(1 + xy)
    deg = 6
    c = np.zeros((1, deg + 1, deg + 1, deg + 1), dtype=complex)
    from math import factorial
    for i in range(deg + 1):
        for j in range(deg + 1 - i):
            for k in range(deg + 1 - i - j):
                c[0, i, j, k] = 2 * 2 ** j * (-1) ** k / (factorial(i) * factorial(j) * factorial(k))
    e = MultiSeries(c, deg)
    xy = np.zeros_like(c)
    xy[0, 0, 0, 0] = 1
    xy[0, 1, 1, 0] = 1
    lg = (e * MultiSeries(xy, deg)).log()
    assert lg.c[0, 0, 0, 0] == pytest.approx(np.log(2))
    assert lg.c[0, 1, 0, 0] == pytest.approx(1)
    assert lg.c[0, 0, 1, 0] == pytest.approx(2)
    assert lg.c[0, 0, 0, 1] == pytest.approx(-1)
    assert lg.c[0, 2, 2, 0] == pytest.approx(-0.5)
    assert lg.c[0, 3, 3, 0] == pytest.approx(1 / 3)
    assert abs(lg.c[0, 2, 0, 0]) < 1e-12
    assert lg.derivative_at_zero((2, 2, 0))[0] == pytest.approx(-0.5 * 4)
