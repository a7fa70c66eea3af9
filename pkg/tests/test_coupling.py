import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mixinglab import chain, coupling, dynsys
from mixinglab.chain import ChainParams
from mixinglab.dynsys import RegimeError

CS = dynsys.c_star()


def test_f_shared_examples():
    params = ChainParams(0.7, 5)
    assert coupling.f_shared(params, 2, np.zeros(5)) == 5
    assert coupling.f_shared(params, 2, np.ones(5)) == 0
    # state index 1 out of n = 2, i.e. the value 1/2
    assert coupling.f_shared(ChainParams(0, 2), 1, [0.3, 0.7]) == 1
    with pytest.raises(ValueError):
        coupling.f_shared(params, 2, np.zeros(4))


@pytest.mark.parametrize("c,n,x", [(1, 20, 5), (CS, 30, 10), (-8, 15, 15)])
def test_f_shared_marginal(c, n, x):
    params = ChainParams(c, n)
    rng = np.random.default_rng(3)
    draws = coupling.f_shared(params, np.full(10**5, x), rng.random((10**5, n)))
    observed = np.bincount(draws, minlength=n + 1)
    expected = np.asarray(chain.build_kernel(params))[x] * len(draws)
    # merge sparse cells so the chi-square approximation is valid
    keep = expected >= 5
    obs = np.append(observed[keep], observed[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    assert stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue > 1e-4


@settings(max_examples=40)
@given(st.floats(0.01, 10), st.integers(2, 40), st.data())
def test_monotone_coupling_positive_c(c, n, data):
    x = data.draw(st.integers(0, n))
    y = data.draw(st.integers(x, n))
    u = np.random.default_rng(data.draw(st.integers(0, 10**6))).random(n)
    params = ChainParams(c, n)
    assert coupling.f_shared(params, x, u) <= coupling.f_shared(params, y, u)


@settings(max_examples=40)
@given(st.floats(-10, -0.01), st.integers(2, 40), st.data())
def test_order_reverses_negative_c(c, n, data):
    x = data.draw(st.integers(0, n))
    y = data.draw(st.integers(x, n))
    u = np.random.default_rng(data.draw(st.integers(0, 10**6))).random(n)
    params = ChainParams(c, n)
    assert coupling.f_shared(params, x, u) >= coupling.f_shared(params, y, u)


def test_contraction_examples():
    rep = coupling.contraction_check(ChainParams(1, 10), 3, 3, reps=1000)
    assert rep.closed_form == 0 and rep.mc_mean == 0 and rep.mc_agrees
    rep = coupling.contraction_check(ChainParams(1, 10), 4, 6, reps=10**4)
    assert rep.closed_form == pytest.approx(abs(dynsys.m(1, 0.4) - dynsys.m(1, 0.6)))
    assert rep.closed_form == pytest.approx(0.04697, abs=1e-5)


def test_contraction_band_near_fixed_point():
    c = CS + 1
    n = 50
    j = round(dynsys.fixed_point(c) * n)
    rep = coupling.contraction_check(ChainParams(c, n), j, j + 1, reps=10**5, rng=np.random.default_rng(11))
    assert rep.in_band
    assert rep.mc_agrees
    assert rep.bound_holds
    assert rep.gamma_c < 1


def test_contraction_band_regime():
    with pytest.raises(RegimeError):
        coupling.contraction_band(-8)


def test_drift_constants_examples():
    d = coupling.drift_constants(ChainParams(0, 40))
    assert d.k_c == 0 and d.lambda_c == 0
    assert d.L_cn == pytest.approx(math.sqrt(math.pi / 80))
    d = coupling.drift_constants(ChainParams(1, 100))
    assert d.L_cn == pytest.approx(0.15666, abs=1e-5)
    assert d.lambda_c < 1
    assert coupling.drift_constants(ChainParams(1, 10**4)).L_cn < d.L_cn
    with pytest.raises(RegimeError):
        coupling.drift_constants(ChainParams(CS, 10))


@pytest.mark.parametrize("c", [0, 1, 3, -4])
@pytest.mark.parametrize("n", [50, 100])
def test_drift_inequality(c, n):
    assert coupling.drift_check(ChainParams(c, n)).ok


def test_drift_c0_is_mean_absolute_deviation():
    params = ChainParams(0, 50)
    rep = coupling.drift_check(params)
    k = np.asarray(chain.build_kernel(params))
    mad = k[0] @ np.abs(params.states - 0.5)
    np.testing.assert_allclose(rep.KV, mad, atol=1e-14)
    assert mad <= rep.constants.L_cn


def test_coupled_run_examples():
    params = ChainParams(1, 20)
    assert coupling.coupled_run(params, 4, 4, 5, seed=0).meet_time == 0
    for seed in range(20):
        tr = coupling.coupled_run(ChainParams(0, 20), 0, 20, 5, seed)
        assert tr.meet_time == 1


@settings(max_examples=25, deadline=None)
@given(st.floats(-10, 10), st.integers(2, 30), st.integers(0, 10**6))
def test_coupled_chains_coalesce_permanently(c, n, seed):
    tr = coupling.coupled_run(ChainParams(c, n), 0, n, 30, seed)
    if tr.meet_time is not None:
        assert tr.xs[tr.meet_time:] == tr.xs_prime[tr.meet_time:]
    again = coupling.coupled_run(ChainParams(c, n), 0, n, 30, seed)
    assert again.xs == tr.xs


def test_coupled_distance_decays():
    curve = coupling.mean_distance_curve(ChainParams(1, 100), 0, 100, 50, range(1000))
    assert curve[0] == 1
    rate = coupling.fitted_rate(curve)
    assert 0 < rate < 1


def test_coupling_identity_monte_carlo():
    rng = np.random.default_rng(5)
    for c in (1, CS + 0.5):
        params = ChainParams(c, 40)
        for _ in range(5):
            x, y = rng.integers(0, 41, size=2)
            mean, se = coupling.mean_coupled_gap(params, x, y, 10**4, rng)
            closed = abs(dynsys.m(c, x / 40) - dynsys.m(c, y / 40))
            assert abs(mean - closed) <= 4 * se or (se == 0 and mean == closed)


def test_geometric_examples():
    rep = coupling.geometric_bound_check(ChainParams(0, 10), 10)
    assert np.all(rep.tv[1:] <= 1e-13)
    assert rep.decays
    rep = coupling.geometric_bound_check(ChainParams(1, 100))
    assert 0 < rep.rho_hat < 1
    assert abs(rep.rho_hat - rep.lambda2_sq) < 0.05
    assert rep.monotone
    with pytest.raises(RegimeError):
        coupling.geometric_bound_check(ChainParams(-8, 10))


def test_geometric_theoretical_rate_large_n():
    rep = coupling.geometric_bound_check(ChainParams(1, 500))
    rho = rep.rho_theory
    assert 0 < rho < 1
    t = np.arange(len(rep.tv))
    above_floor = rep.tv > 1e-13
    assert np.all(rep.tv[above_floor] <= 5 * 500 * rho ** t[above_floor])
    # the large-n conditions fail at small n and the recipe reports nan
    assert math.isnan(coupling.theoretical_rho(ChainParams(1, 20)))


def test_slow_witness_examples():
    rep = coupling.slow_mixing_witness(ChainParams(-8, 30), 10)
    assert rep.lower_exact[0] == 0.5 and rep.escape[0] == 0
    assert rep.kappa > 1
    band = np.linspace(dynsys.fixed_point(-8) - rep.eps, dynsys.fixed_point(-8) + rep.eps, 1001)
    assert np.all(dynsys.m_prime(-8, band) <= -rep.kappa)
    assert rep.bound_holds
    assert rep.oscillates
    assert rep.escape[1] < 1e-3
    with pytest.raises(RegimeError):
        coupling.slow_mixing_witness(ChainParams(1, 30), 3)


def test_slow_witness_escape_shrinks_with_n():
    esc = [coupling.slow_mixing_witness(ChainParams(-8, n), 10).escape[10] for n in (30, 60, 120, 200)]
    assert all(a > b for a, b in zip(esc, esc[1:]))
    assert esc[-1] < 1e-3


@pytest.mark.parametrize("c", [-6, -8, -12])
@pytest.mark.parametrize("n", [10, 30])
def test_slow_witness_lower_bound_never_violated(c, n):
    assert coupling.slow_mixing_witness(ChainParams(c, n), 40).bound_holds


@pytest.mark.parametrize("n", [25, 50, 100])
def test_close_coupling(n):
    rep = coupling.close_coupling_check(ChainParams(CS, n))
    assert rep.critical
    assert rep.ok
    assert rep.tv_bound == pytest.approx(0.99717, abs=1e-5)
