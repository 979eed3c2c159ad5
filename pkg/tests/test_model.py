import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from branchdual import (
    InteractionParams,
    LambdaMeasure,
    LongTermClass,
    Regime,
    catastrophe_rates,
    classify_long_term,
    classify_regime,
    derive,
    drift_at,
    drift_closed_form,
    lambda_nk,
    load_params,
    params_from_dict,
    params_to_dict,
    transition_rates,
)
from conftest import params

P = InteractionParams


def test_derive_examples():
    dp = derive(P(c=3, a=1, b={1: 2, 2: 1}))
    assert (dp.sigma_coop, dp.m, dp.rho) == (-1.0, 0.0, 0.0)
    dp = derive(P(d=1, pi={1: 2}))
    assert (dp.m, dp.sigma_coop) == (1.0, 0.0)
    dp = derive(P())
    assert dp.rho == dp.b_tot == dp.m == dp.sigma_coop == 0.0


@pytest.mark.parametrize(
    "p, regime",
    [
        (P(c=3, a=1, b={1: 2, 2: 1}), Regime.SUBCRITICAL),
        (P(c=1, b={1: 1}), Regime.CRITICAL),
        (P(c=1, b={1: 3}), Regime.SUPERCRITICAL),
    ],
)
def test_regime(p, regime):
    assert classify_regime(p) is regime


def test_regime_names():
    assert Regime.SUBCRITICAL.value == "SubcriticalCooperative"


@pytest.mark.parametrize("bad", [dict(d=-1), dict(c=math.nan), dict(pi={0: 1}), dict(b={1: -2})])
def test_invalid_params(bad):
    with pytest.raises(ValueError):
        P(**bad)


def test_invalid_atoms():
    for atoms in ([(0.0, 1.0)], [(1.2, 1.0)], [(0.5, -1.0)]):
        with pytest.raises(ValueError):
            LambdaMeasure(tuple(atoms))


def test_lambda_nk_examples():
    lam = LambdaMeasure(((0.5, 1.0),))
    assert lambda_nk(3, 2, lam) == 0.5
    one = LambdaMeasure(((1.0, 2.0),))
    assert lambda_nk(4, 4, one) == 2.0
    assert lambda_nk(4, 2, one) == 0.0
    assert lambda_nk(5, 3, LambdaMeasure(())) == 0.0


def test_catastrophe_rates_frozen():
    # C(4,k) lambda_{4,k} for k = 2, 3, 4 with one atom (0.5, 1)
    np.testing.assert_allclose(catastrophe_rates(4, LambdaMeasure(((0.5, 1.0),))), [1.5, 1.0, 0.25], rtol=1e-15)


@given(st.floats(0.05, 1.0), st.floats(0.01, 3.0), st.integers(2, 40))
def test_lambda_nn(y, w, n):
    lam = LambdaMeasure(((y, w),))
    assert math.isclose(lambda_nk(n, n, lam), w * y ** (n - 2), rel_tol=1e-12)
    total = catastrophe_rates(n, lam).sum()
    assert np.isfinite(total) and total <= w / y**2 * (1 + 1e-12)


def test_transition_rates_pair_convention():
    # pair events are charged per unordered pair: C(n, 2) times the rate
    p = P(d=1, pi={1: 2}, c=3, a=1, b={1: 4}, lam=[(0.5, 1)])
    assert transition_rates(2, p) == [(0, 1.0), (1, 6.0), (3, 8.0)]
    assert transition_rates(3, p) == [(1, 3.5), (2, 13.5), (4, 18.0)]
    assert transition_rates(4, p) == [(1, 0.25), (2, 7.0), (3, 23.5), (5, 32.0)]


def test_transition_rates_trivial():
    p = P(d=1, pi={1: 2}, c=3, a=1, b={1: 4}, lam=[(0.5, 1)])
    assert transition_rates(0, p) == []
    assert transition_rates(1, P(pi={1: 5}, c=2, a=1, b={1: 3}, lam=[(0.5, 1)])) == [(2, 5.0)]


@given(params(), st.integers(0, 60))
def test_rates_well_formed(p, n):
    rates = transition_rates(n, p)
    targets = [j for j, _ in rates]
    assert all(j >= 0 and j != n for j in targets)
    assert all(r > 0 for _, r in rates)
    assert len(set(targets)) == len(targets)


def test_drift_examples():
    assert drift_at(2, P(pi={1: 1}, c=2, b={1: 1})) == 1.0
    p = P(d=1, pi={1: 2}, c=3)
    assert drift_at(1, p) == derive(p).m
    assert drift_at(0, p) == 0.0


@given(params(), st.integers(0, 100))
def test_drift_identity(p, n):
    assert math.isclose(drift_at(n, p), drift_closed_form(n, p), rel_tol=1e-12, abs_tol=1e-9)


@given(params(lam=False), st.integers(0, 60))
def test_parity_preserved(p, n):
    p = p.with_(d=0.0, c=0.0, a=p.a + 0.5, pi={2 * i: r for i, r in p.pi}, b={2 * i: r for i, r in p.b})
    assert all((j - n) % 2 == 0 for j, _ in transition_rates(n, p))


@given(params(), st.floats(0.01, 100.0))
def test_regime_scale_invariant(p, k):
    scaled = P(
        d=k * p.d, c=k * p.c, a=k * p.a,
        pi={i: k * r for i, r in p.pi}, b={i: k * r for i, r in p.b},
        lam=[(y, k * w) for y, w in p.lam.atoms],
    )
    s = derive(p).sigma_coop
    if abs(s) > 1e-9 * (1 + p.c + p.a):
        assert classify_regime(scaled) is classify_regime(p)


@pytest.mark.parametrize(
    "p, parity, cls",
    [
        (P(c=2, b={1: 1}), None, LongTermClass.ABSORBED_AT_1),
        (P(pi={1: 1}, c=2, b={1: 1}), None, LongTermClass.UNIQUE_STATIONARY),
        (P(d=1, c=2), None, LongTermClass.ABSORBED_AT_0),
        (P(d=1, a=1), None, LongTermClass.ABSORBED_AT_0),
        (P(a=1, c=1), None, LongTermClass.ABSORBED_IN_01),
        (P(a=1, c=1, pi={1: 1}), None, LongTermClass.ABSORBED_AT_0),
        (P(a=1, pi={2: 1}, b={2: 0.5}), "even", LongTermClass.ABSORBED_AT_0),
        (P(a=1, b={2: 0.5}), "odd", LongTermClass.ABSORBED_AT_1),
        (P(a=1, pi={2: 1}, b={2: 0.5}), "odd", LongTermClass.UNIQUE_STATIONARY_ODD_PARITY),
    ],
)
def test_long_term(p, parity, cls):
    assert classify_long_term(p, parity) is cls


def test_long_term_refuses_non_subcritical():
    assert classify_long_term(P(c=1, b={1: 1})) is LongTermClass.NOT_CLASSIFIED
    with pytest.raises(ValueError):
        classify_long_term(P(a=1, b={2: 0.5}))


@given(params())
def test_json_round_trip(p):
    assert params_from_dict(json.loads(json.dumps(params_to_dict(p)))) == p


def test_json_rejects_unknown(tmp_path):
    with pytest.raises(ValueError):
        params_from_dict({"d": 1, "k": 2})
    with pytest.raises(ValueError):
        params_from_dict({"pi": {"x": 1}})
    f = tmp_path / "p.json"
    f.write_text('{"pi": {"1": 1}, "c": 2, "b": {"1": 1}, "lambda": [[0.5, 0.4]]}')
    assert load_params(f) == P(pi={1: 1}, c=2, b={1: 1}, lam=[(0.5, 0.4)])
