"""Shared-uniform couplings, drift/contraction constants, and the two-chain
slow-mixing witness.

All chain states are integer indices j (x = j / n). A step of the coupled
pair feeds one block of n uniforms to both chains: the new state counts how
many of the uniforms fall below m_c(x).
"""

from dataclasses import dataclass
import math

import numpy as np

from . import chain, dynsys, spectral
from .dynsys import Regime, RegimeError
from .numerics import linear_fit

MC_BAND = 4.0
TV_FLOOR = 1e-13


def _require(params, *regimes):
    if params.regime not in regimes:
        names = ", ".join(r.value for r in regimes)
        raise RegimeError(f"c = {params.c} is {params.regime.value}; need {names}")


def f_shared(params, x, uniforms):
    """Next state index #{i : u_i <= m_c(x / n)}; the state value is that
    count divided by n. ``x`` may be an array of indices with one uniform
    block per entry along the last axis of ``uniforms``."""
    u = np.asarray(uniforms, dtype=float)
    if u.shape[-1] != params.n:
        raise ValueError(f"expected {params.n} uniforms, got {u.shape[-1]}")
    p = dynsys.m(params.c, np.asarray(x) / params.n)
    return np.count_nonzero(u <= np.asarray(p)[..., None], axis=-1) if np.ndim(x) else int(np.count_nonzero(u <= p))


def contraction_band(c, grid=2001):
    """(eps_c, gamma_c): band half-width around the fixed point, halved until
    max |m_c'| over the band is below 1."""
    if dynsys.classify_c(c) is not Regime.ATTRACTIVE:
        raise RegimeError(f"contraction band needs c > c_star, got {c}")
    xs = dynsys.fixed_point(c)
    eps = 0.5
    while True:
        band = np.linspace(max(xs - eps, 0.0), min(xs + eps, 1.0), grid)
        gamma = float(np.max(np.abs(dynsys.m_prime(c, band))))
        if gamma < 1:
            return eps, gamma
        eps /= 2


@dataclass
class ContractionReport:
    closed_form: float
    mc_mean: float
    mc_se: float
    eps_c: float
    gamma_c: float
    in_band: bool
    lipschitz_bound: float

    @property
    def mc_agrees(self):
        if self.mc_se == 0:
            return self.mc_mean == self.closed_form
        return abs(self.mc_mean - self.closed_form) <= MC_BAND * self.mc_se

    @property
    def bound_holds(self):
        return self.closed_form <= self.lipschitz_bound + 1e-15


def mean_coupled_gap(params, x, x_prime, reps, rng, chunk=20000):
    """Monte Carlo mean and standard error of |f(x;U) - f(x';U)| (in units of 1)."""
    n = params.n
    p, q = dynsys.m(params.c, x / n), dynsys.m(params.c, x_prime / n)
    total = total_sq = 0.0
    done = 0
    while done < reps:
        k = min(chunk, reps - done)
        u = rng.random((k, n))
        d = np.abs(np.count_nonzero(u <= p, axis=1) - np.count_nonzero(u <= q, axis=1)) / n
        total += d.sum()
        total_sq += (d * d).sum()
        done += k
    mean = total / reps
    var = max(total_sq / reps - mean * mean, 0.0)
    return mean, math.sqrt(var / max(reps - 1, 1))


def contraction_check(params, x, x_prime, reps=10**5, rng=None):
    rng = np.random.default_rng(0) if rng is None else rng
    c, n = params.c, params.n
    a, b = x / n, x_prime / n
    closed = abs(dynsys.m(c, a) - dynsys.m(c, b))
    mean, se = mean_coupled_gap(params, x, x_prime, reps, rng)
    eps_c, gamma_c = contraction_band(c)
    xs = dynsys.fixed_point(c)
    in_band = abs(a - xs) <= eps_c and abs(b - xs) <= eps_c
    rate = min(abs(c) / 4, gamma_c) if in_band else abs(c) / 4
    return ContractionReport(
        closed_form=closed, mc_mean=mean, mc_se=se, eps_c=eps_c, gamma_c=gamma_c,
        in_band=in_band, lipschitz_bound=rate * abs(a - b),
    )


@dataclass(frozen=True)
class DriftConstants:
    c: float
    n: int
    lambda_c: float
    L_cn: float
    k_c: float


def drift_constants(params):
    _require(params, Regime.ATTRACTIVE)
    c, n = params.c, params.n
    k_c = dynsys.sup_m2_prime(c)
    scale = 1 + abs(c) / 4
    lam = 1 - (1 - k_c) / scale
    if not lam < 1:
        raise RegimeError(f"lambda_c = {lam} is not < 1")
    return DriftConstants(c=c, n=n, lambda_c=lam, L_cn=scale * math.sqrt(math.pi / (2 * n)), k_c=k_c)


def lyapunov(c, x):
    """V_c(x) = |m_c(x) - x*| + |x - x*|."""
    xs = dynsys.fixed_point(c)
    return np.abs(dynsys.m(c, x) - xs) + np.abs(np.asarray(x) - xs)


@dataclass
class DriftReport:
    constants: DriftConstants
    V: np.ndarray
    KV: np.ndarray
    min_slack: float

    @property
    def ok(self):
        return self.min_slack >= -1e-12


def drift_check(params, kernel=None):
    """Exact K V_c(x) against lambda_c V_c(x) + L_cn at every state."""
    const = drift_constants(params)
    kernel = chain.build_kernel(params) if kernel is None else kernel
    v = lyapunov(params.c, params.states)
    kv = np.asarray(kernel) @ v
    slack = const.lambda_c * v + const.L_cn - kv
    return DriftReport(constants=const, V=v, KV=kv, min_slack=float(np.min(slack)))


@dataclass
class CoupledTrace:
    params: chain.ChainParams
    xs: list
    xs_prime: list
    meet_time: int | None


def coupled_run(params, x, x_prime, t, seed):
    """Two chains from x and x' driven by the same uniform blocks.

    Identical states map to identical states under a shared block, so once
    the chains meet they stay together."""
    rng = np.random.default_rng(seed)
    xs, ys = [int(x)], [int(x_prime)]
    meet = 0 if x == x_prime else None
    for s in range(1, t + 1):
        u = rng.random(params.n)
        if meet is not None:
            nxt = f_shared(params, xs[-1], u)
            xs.append(nxt)
            ys.append(nxt)
            continue
        xs.append(f_shared(params, xs[-1], u))
        ys.append(f_shared(params, ys[-1], u))
        if xs[-1] == ys[-1]:
            meet = s
    return CoupledTrace(params=params, xs=xs, xs_prime=ys, meet_time=meet)


def mean_distance_curve(params, x, x_prime, t, seeds):
    """E|X_s - X'_s| for s = 0..t, averaged over one coupled run per seed."""
    runs = [coupled_run(params, x, x_prime, t, s) for s in seeds]
    gaps = np.array([np.abs(np.subtract(r.xs, r.xs_prime)) for r in runs])
    return gaps.mean(axis=0) / params.n


def fitted_rate(curve, lo=1e-12, hi=None):
    """exp(slope) of log(curve) against t over entries in (lo, hi]."""
    curve = np.asarray(curve)
    t = np.arange(len(curve))
    mask = curve > lo
    if hi is not None:
        mask &= curve <= hi
    if np.count_nonzero(mask) < 3:
        return math.nan
    slope, _, _ = linear_fit(t[mask], np.log(curve[mask]))
    return math.exp(slope)


def theoretical_rho(params):
    """rho_c from the drift/contraction combination, or nan if the
    large-n conditions fail at this n."""
    c = params.c
    eps, gamma = contraction_band(c)
    gamma = max(gamma, 1e-300)
    const = drift_constants(params)
    lam, L = const.lambda_c, const.L_cn
    outer = (eps * lam + 2) / (eps + 2)
    cond1 = (2 * L + 1 - lam) / (eps + 1) <= (1 - lam) / (eps / 2 + 1)
    if abs(c) < 4:
        return max(gamma, abs(c) / 4) if cond1 else math.nan
    cond2 = math.log(abs(c) / 4) * math.log(2 * L + 1) <= 0.5 * math.log(gamma) * math.log(outer)
    if not (cond1 and cond2):
        return math.nan
    num = math.log(2 * L + 1) - math.log(outer)
    r = num / (-math.log(gamma) + math.log(abs(c) / 4) + num)
    return max(gamma**r * (2 * L + 1) ** (1 - r), (abs(c) / 4) ** r * outer ** (1 - r))


@dataclass
class GeometricReport:
    tv: np.ndarray
    rate_per_step: float
    rho_hat: float
    lambda2_sq: float
    rho_theory: float
    monotone: bool

    @property
    def decays(self):
        return bool(np.all(self.tv[1:] <= TV_FLOOR)) or self.rate_per_step < 1


def geometric_bound_check(params, t_max=60, window=(1e-12, 1e-2)):
    """Exact TV from the extreme states, its fitted geometric rate, and the
    spectral prediction. ``rho_hat`` is the fitted two-step factor, to be
    compared with 1 - G(K^2) = lambda_2^2."""
    _require(params, Regime.ATTRACTIVE)
    kernel = chain.build_kernel(params)
    pi = chain.stationary(params)
    curves = chain.tv_curve(kernel, pi, "extremes", t_max)
    tv = curves.max(axis=0)
    rate = fitted_rate(tv, *window)
    spec = spectral.spectrum(kernel)
    return GeometricReport(
        tv=tv, rate_per_step=rate, rho_hat=rate * rate,
        lambda2_sq=1 - spec.gap_K2, rho_theory=theoretical_rho(params),
        monotone=bool(np.all(np.diff(curves, axis=1) <= 1e-12)),
    )


def slow_band(c, grid=2001):
    """(kappa, eps) with m_c' <= -kappa < -1 on [x* - eps, x* + eps]."""
    if dynsys.classify_c(c) is not Regime.REPELLING:
        raise RegimeError(f"slow band needs c < c_star, got {c}")
    xs = dynsys.fixed_point(c)
    kappa = (1 + abs(dynsys.m_prime(c, xs))) / 2
    eps = 0.99 * min(xs, 1 - xs)
    while True:
        band = np.linspace(xs - eps, xs + eps, grid)
        if np.max(dynsys.m_prime(c, band)) <= -kappa:
            return kappa, eps
        eps /= 2


@dataclass
class SlowMixingReport:
    kappa: float
    eps: float
    psi: float
    escape: np.ndarray
    tv_max: np.ndarray
    lower_exact: np.ndarray
    lower_theory: np.ndarray
    home_mass: np.ndarray

    @property
    def bound_holds(self):
        return bool(np.all(self.tv_max >= self.lower_exact - 1e-12)) and bool(
            np.all(self.tv_max >= self.lower_theory - 1e-12)
        )

    @property
    def oscillates(self):
        return bool(np.all(self.home_mass > 0.5))


def slow_mixing_witness(params, t):
    """Exact laws of the chains started at 0 and 1 for steps 0..t.

    ``escape[s]`` is P_s: the probability that either chain is outside its
    expected side (A_- or A_+ alternating with the parity of s)."""
    _require(params, Regime.REPELLING)
    c, n = params.c, params.n
    kappa, eps = slow_band(c)
    psi = 2 * (kappa - 1) ** 2 * eps**2
    xs = dynsys.fixed_point(c)
    states = params.states
    lower_set = states <= xs - eps
    upper_set = states >= xs + eps
    kernel = chain.build_kernel(params)
    pi = chain.stationary(params)
    mat = np.asarray(kernel)
    lo, hi = chain.point_mass(n, 0), chain.point_mass(n, n)
    escape, tv_max, home = [], [], []
    for s in range(t + 1):
        a_set, b_set = (lower_set, upper_set) if s % 2 == 0 else (upper_set, lower_set)
        in_a, in_b = lo[a_set].sum(), hi[b_set].sum()
        escape.append((1 - in_a) + (1 - in_b))
        home.append(min(in_a, in_b))
        tv_max.append(max(chain.tv_distance(lo, pi), chain.tv_distance(hi, pi)))
        lo, hi = lo @ mat, hi @ mat
    escape = np.array(escape)
    steps = np.arange(t + 1)
    return SlowMixingReport(
        kappa=kappa, eps=eps, psi=psi, escape=escape, tv_max=np.array(tv_max),
        lower_exact=0.5 - escape / 2, lower_theory=0.5 - 2 * steps * math.exp(-psi * n),
        home_mass=np.array(home),
    )


@dataclass
class CloseCouplingReport:
    critical: bool
    max_two_step_tv: float
    tv_bound: float
    max_mean_gap: float
    mean_gap_bound: float

    @property
    def ok(self):
        return self.max_two_step_tv <= self.tv_bound and self.max_mean_gap <= self.mean_gap_bound + 1e-15


def close_coupling_check(params):
    """Exact TV(K^2(x, .), K^2(x + 1/n, .)) over adjacent pairs against 1 - e^c."""
    c, n = params.c, params.n
    kernel = chain.build_kernel(params)
    k2 = np.asarray(kernel) @ np.asarray(kernel)
    tv = 0.5 * np.sum(np.abs(k2[1:] - k2[:-1]), axis=1)
    means = dynsys.m(c, params.states)
    return CloseCouplingReport(
        critical=params.regime is Regime.CRITICAL,
        max_two_step_tv=float(np.max(tv)),
        tv_bound=1 - math.exp(c),
        max_mean_gap=float(np.max(np.abs(np.diff(means)))),
        mean_gap_bound=0.5 - 1 / (1 + math.exp(-c / n)),
    )
