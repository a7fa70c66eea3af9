import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixinglab import dynsys as ds
from mixinglab.dynsys import Regime

CS = ds.c_star()


def test_critical_constants_values():
    const = ds.solve_critical_constants()
    assert const.x_star == pytest.approx(1.278464542761074, abs=1e-13)
    assert const.c_star == pytest.approx(-5.869586019429697, abs=1e-12)
    assert round(const.x_star, 3) == 1.278
    assert round(const.c_star, 2) == -5.87
    assert abs(ds.x0_residual(const.x_star)) <= 1e-12
    assert const.c_star == -1 - const.x_star - math.exp(const.x_star)


def test_m_examples():
    assert ds.m(3.7, 0) == 0.5
    assert ds.m(0, 0.3) == 0.5
    assert ds.m(1, 1) == pytest.approx(0.73105858, abs=1e-8)
    np.testing.assert_allclose(ds.m(1, np.array([0.0, 1.0])), [0.5, 0.7310585786300049])


def test_m_prime_examples():
    assert ds.m_prime(-3.0, 0) == pytest.approx(-0.75)
    assert ds.m_prime(0, 0.4) == 0
    assert ds.m_prime(CS, ds.fixed_point(CS)) == pytest.approx(-1, abs=1e-8)


def test_m2_prime_examples():
    assert ds.m2_prime(0, 0.3) == 0
    assert ds.m2_prime(CS, ds.fixed_point(CS)) == pytest.approx(1, abs=1e-8)
    h = 1e-5
    fd = (ds.m(1, ds.m(1, 0.5 + h)) - ds.m(1, ds.m(1, 0.5 - h))) / (2 * h)
    assert ds.m2_prime(1, 0.5) == pytest.approx(fd, abs=1e-6)


def test_fixed_point_examples():
    assert ds.fixed_point(0) == pytest.approx(0.5, abs=1e-14)
    assert ds.fixed_point(1) == pytest.approx(0.6590460684074, abs=1e-12)
    x_star = ds.solve_critical_constants().x_star
    assert ds.fixed_point(CS) == pytest.approx(x_star / -CS, abs=1e-13)
    # the truncated four-digit value is 0.2178; 0.2177 is within one unit
    assert ds.fixed_point(CS) == pytest.approx(0.2177, abs=2e-4)


@given(st.floats(-10, 10))
def test_fixed_point_residual(c):
    x = ds.fixed_point(c)
    assert 0 <= x <= 1
    assert abs(ds.m(c, x) - x) <= 1e-12


@given(st.floats(-10, 10))
def test_m_prime_bounded_by_quarter_c(c):
    xs = np.linspace(0, 1, 1001)
    assert np.all(np.abs(ds.m_prime(c, xs)) <= abs(c) / 4 + 1e-12)


@settings(max_examples=30)
@given(st.floats(-5.8, 10))
def test_m2_prime_contractive_above_critical(c):
    xs = np.linspace(0, 1, 1001)
    vals = ds.m2_prime(c, xs)
    assert np.all(vals >= 0)
    assert np.all(vals < 1)


def test_m2_prime_at_critical_below_one_off_fixed_point():
    xs = np.linspace(0, 1, 10001)
    xfp = ds.fixed_point(CS)
    vals = ds.m2_prime(CS, xs[np.abs(xs - xfp) > 1e-3])
    assert np.all((vals >= 0) & (vals < 1))


@pytest.mark.parametrize("c", [-5.5, -4, 0, 1, 5])
def test_attractive_regime(c):
    rep = ds.report(c)
    assert abs(rep.deriv_at_fp) < 1
    assert rep.regime is Regime.ATTRACTIVE
    assert ds.classify_c(c) is Regime.ATTRACTIVE


@pytest.mark.parametrize("c", [-6, -8, -12])
def test_repelling_regime(c):
    rep = ds.report(c)
    assert abs(rep.deriv_at_fp) > 1
    assert rep.regime is Regime.REPELLING
    assert ds.classify_c(c) is Regime.REPELLING


def test_critical_regime():
    assert ds.report(CS).regime is Regime.CRITICAL
    assert ds.classify_c(CS) is Regime.CRITICAL


def test_critical_identities():
    assert max(abs(r) for r in ds.critical_identities()) <= 1e-9


def test_iterate_examples():
    assert ds.iterate(0, 0.9, 2) == [0.9, 0.5, 0.5]
    xfp = ds.fixed_point(1)
    assert ds.iterate(1, xfp, 5) == pytest.approx([xfp] * 6, abs=1e-14)
    assert ds.iterate(1, 0.5, 50)[-1] == pytest.approx(0.6590460684074, abs=1e-10)


def test_dyn_mixing_time_examples():
    assert ds.dyn_mixing_time(0, 0.9, 0.01) == 1
    assert ds.dyn_mixing_time(0, 0.5, 0.01) == 0
    assert ds.dyn_mixing_time(-8, 0.9, 0.01) == math.inf


def test_dyn_mixing_time_critical_slow_down():
    eps = [0.1, 0.05, 0.02, 0.01, 0.005]
    prod = [e * ds.dyn_mixing_time(CS, 0.9, e) for e in eps]
    assert all(math.isfinite(p) for p in prod)
    # eps * tau does not vanish; it grows as eps shrinks
    assert all(b >= a for a, b in zip(prod, prod[1:]))
    assert min(prod) > 1


def test_dyn_mixing_time_rejects_bad_eps():
    with pytest.raises(ValueError):
        ds.dyn_mixing_time(1, 0.5, 0)


def test_sup_m2_prime_examples():
    assert ds.sup_m2_prime(0) == 0
    assert ds.sup_m2_prime(-2) <= 0.25
    assert 0 < ds.sup_m2_prime(1) < 1
    for c in (1, -4, -5.5):
        assert ds.sup_m2_prime(c) < 1


def test_n_infty_nonpositive():
    xs = np.linspace(1e-6, 1 - 1e-6, 10**5)
    assert np.max(ds.n_infty_g(xs)) <= 1e-9
    assert ds.n_infty_g(ds.fixed_point(CS)) == pytest.approx(0, abs=1e-12)


def test_m2t_lower_bound():
    assert ds.m2t_neighborhood() > 0
    assert ds.m2t_check(t_max=100) >= 1
