import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from mixinglab import chain, rbm
from mixinglab.rbm import Configuration, RbmParams


def random_params(seed, n, m):
    rng = np.random.default_rng(seed)
    return RbmParams(rng.normal(size=(n, m)), rng.normal(size=n), rng.normal(size=m))


def test_params_validation():
    with pytest.raises(ValueError):
        RbmParams(np.zeros((2, 3)), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        RbmParams(np.array([[np.inf]]), [0.0], [0.0])
    with pytest.raises(ValueError):
        Configuration([0, 2], [1])


def test_energy_examples():
    p = RbmParams(np.zeros((3, 2)), np.ones(3), np.zeros(2))
    assert rbm.energy(p, Configuration([0, 0, 0], [0, 0])) == 0
    assert rbm.energy(p, Configuration([1, 0, 1], [1, 1])) == -2
    spec = RbmParams.specialized(1.7, 2)
    assert rbm.energy(spec, Configuration([1, 1], [1, 1])) == pytest.approx(-2 * 1.7)
    with pytest.raises(ValueError):
        rbm.energy(spec, Configuration([1, 1, 0], [1, 1]))


def test_gibbs_step_deterministic_given_stream():
    p = random_params(0, 4, 3)
    y = Configuration([1, 0, 1, 0], [0, 1, 1])
    a = rbm.gibbs_step(p, y, np.random.default_rng(42))
    b = rbm.gibbs_step(p, y, np.random.default_rng(42))
    np.testing.assert_array_equal(a.visible, b.visible)
    np.testing.assert_array_equal(a.hidden, b.hidden)


def test_gibbs_step_zero_params_fair_coins():
    p = RbmParams(np.zeros((4, 4)), np.zeros(4), np.zeros(4))
    rng = np.random.default_rng(1)
    y = Configuration(np.zeros(4), np.zeros(4))
    ones = np.zeros(8)
    reps = 20000
    for _ in range(reps):
        y = rbm.gibbs_step(p, y, rng)
        ones += np.concatenate([y.visible, y.hidden])
    se = math.sqrt(0.25 / reps)
    assert np.all(np.abs(ones / reps - 0.5) <= 4 * se)


def test_gibbs_step_order_visible_first():
    # with W huge, v' copies h and h' copies v'
    p = RbmParams(np.eye(3) * 60, np.full(3, -30.0), np.full(3, -30.0))
    y = rbm.gibbs_step(p, Configuration([0, 0, 0], [1, 0, 1]), np.random.default_rng(0))
    np.testing.assert_array_equal(y.visible, [1, 0, 1])
    np.testing.assert_array_equal(y.hidden, [1, 0, 1])


def test_exact_law_examples():
    p = RbmParams(np.zeros((2, 3)), np.zeros(2), np.zeros(3))
    np.testing.assert_allclose(rbm.exact_law(p).probs, np.full(32, 1 / 32))
    w = 0.8
    law = rbm.exact_law(RbmParams([[w]], [0.0], [0.0])).probs
    # order: (v, h) = (0,0), (1,0), (0,1), (1,1)
    weights = np.array([1, 1, 1, math.exp(w)])
    np.testing.assert_allclose(law, weights / weights.sum(), rtol=1e-14)
    a, b = 0.3, -0.4
    law = rbm.exact_law(RbmParams([[w]], [a], [b])).probs
    weights = np.exp([0, a, b, a + b + w])
    np.testing.assert_allclose(law, weights / weights.sum(), rtol=1e-14)


def test_exact_law_cap():
    with pytest.raises(ValueError):
        rbm.exact_law(RbmParams.specialized(1.0, 9))


@pytest.mark.parametrize("c", [1.0, -3.0, -8.0])
def test_pushforward_is_stationary_law(c):
    p = RbmParams.specialized(c, 3)
    law = rbm.exact_law(p).probs
    pi = chain.stationary(chain.ChainParams(c, 3))
    np.testing.assert_allclose(rbm.pushforward_visible_mean(p, law), pi, atol=1e-12)
    np.testing.assert_allclose(rbm.pushforward_hidden_mean(p, law), pi, atol=1e-12)


def test_equivalence_t0():
    rep = rbm.equivalence_check(1.0, 3, 0)
    assert rep.max_error == 0


@pytest.mark.parametrize("c", [1.0, -3.0])
def test_equivalence_and_sandwich(c):
    rep = rbm.equivalence_check(c, 3, 10)
    assert rep.max_error <= 1e-10
    assert rep.max_sandwich_excess <= 1e-12
    assert rep.ok


def test_equivalence_larger_layer():
    assert rbm.equivalence_check(-5.0, 5, 4).ok


def test_equivalence_cap():
    with pytest.raises(ValueError):
        rbm.equivalence_check(1.0, 7, 1)


def test_transition_matrix_matches_evolve():
    p = random_params(3, 3, 2)
    t = rbm.transition_matrix(p)
    np.testing.assert_allclose(t.sum(axis=1), 1, atol=1e-14)
    mu = np.random.default_rng(0).random(t.shape[0])
    mu /= mu.sum()
    np.testing.assert_allclose(mu @ t @ t, rbm.evolve_law(p, mu, 2), atol=1e-15)


def test_transition_matrix_cap():
    with pytest.raises(ValueError):
        rbm.transition_matrix(RbmParams.specialized(1.0, 7))


def test_transition_rows_match_sampler():
    p = random_params(5, 2, 2)
    t = rbm.transition_matrix(p)
    law = rbm.exact_law(p)
    start = Configuration([1, 0], [0, 1])
    k = law.index(start)
    rng = np.random.default_rng(9)
    counts = np.zeros(16)
    for _ in range(20000):
        counts[law.index(rbm.gibbs_step(p, start, rng))] += 1
    expected = t[k] * 20000
    keep = expected > 0
    assert stats.chisquare(counts[keep], expected[keep]).pvalue > 1e-4


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3))
def test_sweep_preserves_boltzmann_law(seed, n, m):
    assert rbm.stationarity_defect(random_params(seed, n, m)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 3))
def test_hidden_layer_chain_reversible(seed, n, m):
    assert rbm.hidden_chain_defect(random_params(seed, n, m)) <= 1e-10


def test_full_sweep_is_not_reversible():
    # n = n' = 1, w != 0: P((0,1) -> (1,0)) pi(0,1) differs from the reverse flow
    assert rbm.detailed_balance_defect(RbmParams([[1.5]], [0.0], [0.0])) > 1e-3
    assert rbm.detailed_balance_defect(RbmParams.specialized(0.0, 2)) <= 1e-15


def test_visible_conditionals_depend_on_mean_only():
    assert rbm.mean_only_dependence_defect(1.3, 4) <= 1e-15
    assert rbm.mean_only_dependence_defect(-8.0, 4) <= 1e-15


def test_long_run_histogram():
    c, n = 1.0, 3
    p = RbmParams.specialized(c, n)
    rng = np.random.default_rng(2024)
    draws = rbm.gibbs_means(p, np.zeros((10**6, n)), 1, rng, burn_in=20)[0]
    counts = np.bincount(np.rint(draws * n).astype(int), minlength=n + 1)
    expected = chain.stationary(chain.ChainParams(c, n)) * counts.sum()
    assert stats.chisquare(counts, expected).pvalue > 1e-4


def test_specialized_visible_probability():
    p = RbmParams.specialized(2.5, 4)
    probs, means = rbm.visible_conditionals(p)
    np.testing.assert_allclose(probs, np.repeat(special.expit(2.5 * means)[:, None], 4, axis=1))
