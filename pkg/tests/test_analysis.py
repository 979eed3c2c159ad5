import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from branchdual import (
    AbsorbingRegimeError,
    Distribution,
    InteractionParams,
    dual_fixation_limit,
    empirical_distribution,
    fixation_probability,
    fixation_time_bound,
    fixation_time_green,
    scale_function,
    stationary_closed_form,
    stationary_numeric,
    stationary_residual,
)

P = InteractionParams
GEOM = P(pi={1: 1}, c=2, b={1: 1})
XS = np.round(np.arange(0.1, 1.0, 0.1), 10)


def geometric(K=400):
    k = np.arange(1, K + 1)
    return Distribution(1, 0.5**k / np.sum(0.5**k))


def test_stationary_geometric():
    mu = stationary_numeric(GEOM, 200)
    assert mu.tv(geometric()) < 1e-3
    assert abs(mu.tv(geometric()) - stationary_numeric(GEOM, 400).tv(geometric())) < 1e-6
    assert stationary_residual(mu, GEOM, 200) < 1e-10


def test_stationary_absorbing():
    with pytest.raises(AbsorbingRegimeError):
        stationary_numeric(P(d=1), 50)
    with pytest.raises(AbsorbingRegimeError):
        stationary_numeric(P(c=2, b={1: 1}), 50)


def test_stationary_odd_parity():
    p = P(a=1, pi={2: 1}, b={2: 0.5})
    mu = stationary_numeric(p, 301, start_parity="odd")
    assert mu.dense(20)[::2].sum() == 0.0
    assert stationary_residual(mu, p, 301) < 1e-10
    # doubling the truncation leaves the law unchanged
    assert mu.tv(stationary_numeric(p, 601, start_parity="odd")) < 1e-9


def test_closed_form_examples():
    mu = stationary_closed_form(1, 1, 2)
    np.testing.assert_allclose(mu.probs[:10], 0.5 ** np.arange(1, 11), rtol=1e-13)
    assert math.isclose(stationary_closed_form(1, 2, 4).pmf(1), 1 / (2 * math.log(2)), rel_tol=1e-13)
    assert abs(math.fsum(stationary_closed_form(1, 1, 2, K=60).probs) - 1) <= 1e-15
    # b1 = 0 gives the zero-truncated Poisson law with parameter 2 rho / c
    mu = stationary_closed_form(1.5, 0, 1)
    lam = 3.0
    ref = np.array([lam**k / math.factorial(k) for k in range(1, 8)]) / math.expm1(lam)
    np.testing.assert_allclose(mu.probs[:7], ref, rtol=1e-12)


@pytest.mark.parametrize("rho, b1, c", [(1, 1, 2), (1, 3, 4), (2, 1, 3), (0.5, 1, 1.5), (1, 2, 4), (1, 0, 2)])
def test_consistency_triangle(rho, b1, c):
    p = P(pi={1: rho}, b={1: b1} if b1 else {}, c=c)
    num = stationary_numeric(p, 400)
    cf = stationary_closed_form(rho, b1, c)
    ratio = scale_function(p).ratio(XS)
    np.testing.assert_allclose(num.gf(XS), cf.gf(XS), atol=1e-3)
    np.testing.assert_allclose(num.gf(XS), ratio, atol=1e-3)
    assert num.tv(cf) < 1e-10


def test_triangle_outside_closed_form():
    p = P(pi={1: 1, 2: 0.5}, c=2, b={2: 0.3})
    num = stationary_numeric(p, 400)
    np.testing.assert_allclose(num.gf(XS), scale_function(p).ratio(XS), atol=1e-6)


def test_scale_examples():
    assert np.allclose(scale_function(P(c=1)).ratio(XS), XS, atol=1e-12)
    table = scale_function(GEOM)
    assert np.max(np.abs(table.ratio(XS) - XS / (2 - XS))) <= 1e-4
    assert abs(table.ratio(0.5) - 1 / 3) <= 1e-4
    assert np.all(np.diff(table.values) > 0)
    assert table.values[0] == 0.0


def test_fixation_probability():
    assert fixation_probability(P(c=2, b={1: 1}), 0.37) == 0.37
    assert abs(fixation_probability(GEOM, 0.5) - 1 / 3) <= 1e-4
    assert fixation_probability(GEOM, 0.0) == 0.0
    assert abs(fixation_probability(GEOM, 1.0) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        fixation_probability(P(c=1, b={1: 1}), 0.5)


def test_green_examples():
    assert abs(fixation_time_green(P(c=1), 0.5) - 2 * math.log(2)) <= 1e-6
    assert fixation_time_green(P(c=1), 0.0) == 0.0 == fixation_time_green(P(c=1), 1.0)
    assert fixation_time_green(P(c=1, b={1: 0.5}), 0.5) <= 4 * math.log(2)


def test_bound_examples():
    assert math.isclose(fixation_time_bound(0.5, 1), 2 * math.log(2), rel_tol=1e-15)
    assert fixation_time_bound(0.0, 1) == 0.0
    assert math.isclose(fixation_time_bound(0.5, 1, {1: 0.5}), 4 * math.log(2), rel_tol=1e-15)


@given(st.floats(0.01, 0.99), st.floats(0.2, 3.0), st.one_of(st.just(0.0), st.floats(0.05, 0.9)))
def test_green_below_bound(x, c, frac):
    b1 = frac * c
    green = fixation_time_green(P(c=c, b={1: b1} if b1 else {}), x)
    bound = fixation_time_bound(x, c, {1: b1})
    if b1 == 0:
        assert math.isclose(green, bound, rel_tol=1e-6)
    else:
        assert green < bound


def test_dual_fixation_limit():
    assert dual_fixation_limit(P(c=2, b={1: 1}), 0.8) == 0.8
    assert abs(dual_fixation_limit(GEOM, 0.5) - 1 / 3) < 1e-12
    assert dual_fixation_limit(P(d=1, c=1, pi={1: 1}), 0.2) == 1.0


def test_distribution_helpers():
    d = empirical_distribution([1, 1, 2, 3])
    assert d.pmf(1) == 0.5 and d.mean() == 1.75
    assert d.tv(Distribution(1, np.array([0.5, 0.25, 0.25]))) == 0.0
    with pytest.raises(ValueError):
        Distribution(0, np.array([0.5, 0.4]))
