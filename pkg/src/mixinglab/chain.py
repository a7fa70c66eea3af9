"""Exact representation of the layer-mean chain on Omega_n = {j/n}.

Given X_t = x the next state is Bin(n, sigma(c x)) / n. States are indexed by
the integer j throughout (x = j / n). Kernels are dense (n+1) x (n+1) and are
kept alongside their log-space entries so that reversibility and spectral
computations never have to take the log of an underflowed probability.

Distributions over Omega_n are plain 1-D numpy arrays of length n + 1.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special

from . import dynsys
from .dynsys import Regime
from .numerics import log_binom_coef, log_sigmoid, normalize_log_weights

MAX_DENSE_N = 4000
LINEAR_STEPS = 4096


@dataclass(frozen=True)
class ChainParams:
    c: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", float(self.c))

    @property
    def states(self):
        return np.arange(self.n + 1) / self.n

    @property
    def regime(self):
        return dynsys.classify_c(self.c)


@dataclass(frozen=True, eq=False)
class Kernel:
    params: ChainParams
    rows: np.ndarray = field(repr=False)
    log_rows: np.ndarray = field(repr=False)

    def __array__(self, dtype=None, copy=None):
        return self.rows if dtype is None else self.rows.astype(dtype)

    @property
    def size(self):
        return self.rows.shape[0]


def log_kernel(params):
    """log K(i, j) = log Bin(j; n, sigma(c i / n))."""
    n = params.n
    j = np.arange(n + 1)
    z = params.c * j / n
    lp, lq = log_sigmoid(z), log_sigmoid(-z)
    return log_binom_coef(n, j)[None, :] + j[None, :] * lp[:, None] + (n - j)[None, :] * lq[:, None]


def build_kernel(params):
    if params.n > MAX_DENSE_N:
        raise ValueError(f"n = {params.n} exceeds the dense-kernel cap {MAX_DENSE_N}")
    log_rows = log_kernel(params)
    # renormalise each row in log space so row sums are 1 to rounding
    log_rows = log_rows - special.logsumexp(log_rows, axis=1, keepdims=True)
    rows = np.exp(log_rows)
    rows.setflags(write=False)
    log_rows.setflags(write=False)
    return Kernel(params=params, rows=rows, log_rows=log_rows)


def log_stationary_weights(params):
    """Unnormalised log pi: log C(n, j) + n log(1 + e^{c j/n})."""
    n = params.n
    j = np.arange(n + 1)
    return log_binom_coef(n, j) + n * np.logaddexp(0.0, params.c * j / n)


def log_stationary(params):
    lw = log_stationary_weights(params)
    return lw - special.logsumexp(lw)


def stationary(params):
    return normalize_log_weights(log_stationary_weights(params))


def point_mass(n, j):
    d = np.zeros(n + 1)
    d[j] = 1.0
    return d


def tv_distance(p, q):
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    out = 0.5 * np.sum(np.abs(p - q), axis=-1)
    return float(out) if p.ndim == 1 else out


def evolve(kernel, start, t):
    """start K^t by t successive vector-matrix products."""
    if t < 0:
        raise ValueError("t must be >= 0")
    mat = np.asarray(kernel)
    v = np.asarray(start, dtype=float).copy()
    for _ in range(t):
        v = v @ mat
    return v


def matrix_power(kernel, t):
    """K^t by repeated squaring; a dense oracle for small n."""
    return np.linalg.matrix_power(np.asarray(kernel), t)


def detailed_balance_defect(kernel, log_pi=None):
    """max |log pi(x) K(x,y) - log pi(y) K(y,x)| over pairs with K > 0.

    For pairs where both sides are representable this is the relative error
    of detailed balance."""
    if log_pi is None:
        log_pi = log_stationary(kernel.params)
    flow = log_pi[:, None] + kernel.log_rows
    return float(np.max(np.abs(flow - flow.T)))


def default_horizon(params):
    n = params.n
    regime = params.regime
    if regime is Regime.ATTRACTIVE:
        return int(10 * n * math.log(n) + 100) if n > 1 else 100
    if regime is Regime.CRITICAL:
        return 10 * n**3
    return 10**7


def _start_indices(n, starts):
    if starts == "extremes":
        return np.array(sorted({0, n}))
    if starts == "all":
        return np.arange(n + 1)
    idx = np.atleast_1d(np.asarray(starts, dtype=int))
    if np.any(idx < 0) or np.any(idx > n):
        raise ValueError(f"start states must lie in [0, {n}]")
    return idx


def tv_curve(kernel, pi, starts="extremes", t_max=100):
    """TV(K^t(x, .), pi) for t = 0..t_max; shape (len(starts), t_max + 1)."""
    idx = _start_indices(kernel.params.n, starts)
    mat = np.asarray(kernel)
    v = np.zeros((len(idx), mat.shape[0]))
    v[np.arange(len(idx)), idx] = 1.0
    out = np.empty((len(idx), t_max + 1))
    for t in range(t_max + 1):
        out[:, t] = 0.5 * np.sum(np.abs(v - pi), axis=1)
        v = v @ mat
    return out


def _first_below(mat, pi, v, eps, t0, t_max):
    """Smallest t in (t0, t_max] with TV(v K^{t - t0}, pi) < eps, or None.

    TV to pi is non-increasing in t, so a galloping search over the powers
    K^{2^k} finds the crossing with O(log t) dense products.
    """
    powers = [mat]
    budget = t_max - t0
    while 2 ** len(powers) <= budget:
        powers.append(powers[-1] @ powers[-1])
    # the predicate TV >= eps holds on a prefix of [t0, t_max]; find its end
    probe, remaining = v, budget
    for k in range(len(powers) - 1, -1, -1):
        if 2**k <= remaining:
            probe = probe @ powers[k]
            remaining -= 2**k
    if tv_distance(probe, pi) >= eps:
        return None
    t = t0
    for k in range(len(powers) - 1, -1, -1):
        if t + 2**k > t_max:
            continue
        cand = v @ powers[k]
        if tv_distance(cand, pi) >= eps:
            v, t = cand, t + 2**k
    return t + 1


def exact_mixing_time(params, eps=0.25, starts="extremes", t_max=None, kernel=None, pi=None):
    """max over starts of the first t with TV(K^t(x, .), pi) < eps.

    Returns None if some start is still eps-far from pi at ``t_max``.
    ``starts`` is "extremes" ({0, n}), "all", or explicit state indices.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    t_max = default_horizon(params) if t_max is None else int(t_max)
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    kernel = build_kernel(params) if kernel is None else kernel
    pi = stationary(params) if pi is None else pi
    mat = np.asarray(kernel)
    linear_cap = min(t_max, LINEAR_STEPS)
    worst = 0
    for j in _start_indices(params.n, starts):
        v = point_mass(params.n, j)
        t = 0
        hit = None
        while True:
            if tv_distance(v, pi) < eps:
                hit = t
                break
            if t == linear_cap:
                break
            v = v @ mat
            t += 1
        if hit is None:
            if t >= t_max:
                return None
            hit = _first_below(mat, pi, v, eps, t, t_max)
            if hit is None:
                return None
        worst = max(worst, hit)
    return worst


def sample_step(params, x, rng):
    """One transition from state index x: count of n uniforms below m_c(x/n).

    Uses the shared-uniform representation, so feeding the same generator
    state to two chains couples them.
    """
    p = dynsys.m(params.c, x / params.n)
    u = rng.random(params.n)
    return int(np.count_nonzero(u <= p))


def simulate(params, x0, steps, rng):
    """Trajectory of state indices [x0, X_1, ..., X_steps]."""
    out = np.empty(steps + 1, dtype=np.int64)
    out[0] = x = x0
    for t in range(1, steps + 1):
        x = sample_step(params, x, rng)
        out[t] = x
    return out


@dataclass
class HoeffdingReport:
    params: ChainParams
    eps_grid: tuple
    min_window_slack: float
    max_abs_dev: float
    abs_dev_bound: float

    @property
    def ok(self):
        return self.min_window_slack >= -1e-12 and self.max_abs_dev <= self.abs_dev_bound + 1e-12


def hoeffding_check(params, eps_grid, kernel=None):
    """Exact check of the binomial concentration bounds at every state.

    For each x and eps: K(x, (m(x)-eps, m(x)+eps)) >= 1 - 2 exp(-2 n eps^2),
    and E|X - m(x)| <= sqrt(pi / (2n)).
    """
    kernel = build_kernel(params) if kernel is None else kernel
    n = params.n
    xs = params.states
    mean = dynsys.m(params.c, xs)
    dev = np.abs(xs[None, :] - mean[:, None])
    rows = np.asarray(kernel)
    slack = math.inf
    for eps in eps_grid:
        if not eps > 0:
            raise ValueError("eps values must be > 0")
        mass = np.sum(np.where(dev < eps, rows, 0.0), axis=1)
        bound = 1 - 2 * math.exp(-2 * n * eps * eps)
        slack = min(slack, float(np.min(mass - bound)))
    abs_dev = np.sum(rows * dev, axis=1)
    return HoeffdingReport(
        params=params,
        eps_grid=tuple(eps_grid),
        min_window_slack=slack,
        max_abs_dev=float(np.max(abs_dev)),
        abs_dev_bound=math.sqrt(math.pi / (2 * n)),
    )


def k2t_check(params, t_max=5, eps_grid=(0.05, 0.1, 0.2, 0.3, 0.5)):
    """Worst slack of the 2t-step tail bound at c_star:
    K^{2t}(x, {|x' - m^{2t}(x)| >= eps}) <= 4t exp(-32 n eps^2 / ((|c|+4)^2 t^2)).
    Returns min over x, t, eps of (bound - mass); the bound holds iff >= 0."""
    kernel = build_kernel(params)
    k2 = np.asarray(kernel) @ np.asarray(kernel)
    n, c = params.n, params.c
    xs = params.states
    target = xs.copy()
    power = np.eye(n + 1)
    worst = math.inf
    for t in range(1, t_max + 1):
        power = power @ k2
        target = dynsys.m(c, dynsys.m(c, target))
        dist = np.abs(xs[None, :] - target[:, None])
        for eps in eps_grid:
            mass = np.sum(np.where(dist >= eps, power, 0.0), axis=1)
            bound = 4 * t * math.exp(-32 * n * eps * eps / ((abs(c) + 4) ** 2 * t * t))
            worst = min(worst, float(np.min(bound - mass)))
    return worst


def tosh_iterations(c, n, eps):
    """Iteration count of the one-step-coupling bound for ||W||_1 ||W^T||_1 = c^2 < 4.

    Counts full Gibbs sweeps, each of which is two steps of the layer-mean chain."""
    prod = c * c
    if prod >= 4:
        return math.inf
    return math.log(n / eps) / (math.log(4) - math.log(prod)) if prod > 0 else 0.0
