"""Two-layer binary Gibbs sampler and an exhaustive oracle for tiny layers.

Configurations are enumerated as integers k: bit i (i < n) is visible unit
i and bit n + j is hidden unit j. A sweep resamples the visible layer given
the hidden one, then the hidden layer given the new visible one.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import chain

MAX_EXACT_UNITS = 16
MAX_MATRIX_UNITS = 12


@dataclass(frozen=True, eq=False)
class RbmParams:
    weights: np.ndarray
    visible_bias: np.ndarray
    hidden_bias: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=float))
        a = np.asarray(self.visible_bias, dtype=float).reshape(-1)
        b = np.asarray(self.hidden_bias, dtype=float).reshape(-1)
        if w.shape != (a.size, b.size):
            raise ValueError(f"weights {w.shape} do not match biases ({a.size}, {b.size})")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("parameters must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "visible_bias", a)
        object.__setattr__(self, "hidden_bias", b)

    @property
    def n(self):
        return self.visible_bias.size

    @property
    def n_hidden(self):
        return self.hidden_bias.size

    @classmethod
    def specialized(cls, c, n):
        """W = c/n everywhere, zero biases, n hidden units."""
        return cls(np.full((n, n), c / n), np.zeros(n), np.zeros(n))


@dataclass(frozen=True, eq=False)
class Configuration:
    visible: np.ndarray
    hidden: np.ndarray

    def __post_init__(self):
        for name in ("visible", "hidden"):
            arr = np.asarray(getattr(self, name)).reshape(-1)
            if not np.all((arr == 0) | (arr == 1)):
                raise ValueError(f"{name} entries must be 0 or 1")
            object.__setattr__(self, name, arr.astype(np.int8))


def s_v(y):
    return float(np.mean(y.visible))


def s_h(y):
    return float(np.mean(y.hidden))


def _check_dims(params, y):
    if y.visible.size != params.n or y.hidden.size != params.n_hidden:
        raise ValueError(
            f"configuration ({y.visible.size}, {y.hidden.size}) does not match "
            f"parameters ({params.n}, {params.n_hidden})"
        )


def energy(params, y):
    _check_dims(params, y)
    v, h = y.visible.astype(float), y.hidden.astype(float)
    return float(-params.visible_bias @ v - params.hidden_bias @ h - v @ params.weights @ h)


def gibbs_step(params, y, rng):
    _check_dims(params, y)
    pv = special.expit(params.visible_bias + params.weights @ y.hidden)
    v = (rng.random(params.n) < pv).astype(np.int8)
    ph = special.expit(params.hidden_bias + v @ params.weights)
    h = (rng.random(params.n_hidden) < ph).astype(np.int8)
    return Configuration(v, h)


def gibbs_means(params, hidden0, steps, rng, burn_in=0):
    """Run independent replicas (one per row of ``hidden0``) and return the
    visible-layer means s_v after each sweep past ``burn_in``; shape
    (steps, replicas)."""
    h = np.array(hidden0, dtype=float, ndmin=2)
    out = np.empty((steps, h.shape[0]))
    for t in range(burn_in + steps):
        pv = special.expit(params.visible_bias + h @ params.weights.T)
        v = (rng.random(pv.shape) < pv).astype(float)
        ph = special.expit(params.hidden_bias + v @ params.weights)
        h = (rng.random(ph.shape) < ph).astype(float)
        if t >= burn_in:
            out[t - burn_in] = v.mean(axis=1)
    return out


def _bits(count, width):
    return (np.arange(count)[:, None] >> np.arange(width)) & 1


@dataclass(frozen=True, eq=False)
class ExactLaw:
    params: RbmParams
    visible: np.ndarray
    hidden: np.ndarray
    log_probs: np.ndarray

    @property
    def probs(self):
        return np.exp(self.log_probs)

    def index(self, y):
        """Enumeration index of a configuration."""
        n = self.params.n
        return int(y.visible @ (1 << np.arange(n)) + (y.hidden @ (1 << np.arange(y.hidden.size))) * (1 << n))


def exact_law(params):
    n, m = params.n, params.n_hidden
    if n + m > MAX_EXACT_UNITS:
        raise ValueError(f"exhaustive law needs n + n' <= {MAX_EXACT_UNITS}, got {n + m}")
    bits = _bits(1 << (n + m), n + m).astype(float)
    v, h = bits[:, :n], bits[:, n:]
    neg_energy = v @ params.visible_bias + h @ params.hidden_bias + np.sum((v @ params.weights) * h, axis=1)
    log_p = neg_energy - special.logsumexp(neg_energy)
    return ExactLaw(params=params, visible=v.astype(np.int8), hidden=h.astype(np.int8), log_probs=log_p)


def _layer_kernels(params):
    """A[h, v'] = P(visible = v' | hidden = h), B[v', h'] = P(hidden = h' | visible = v')."""
    n, m = params.n, params.n_hidden
    vb, hb = _bits(1 << n, n).astype(float), _bits(1 << m, m).astype(float)
    pv = special.expit(params.visible_bias + hb @ params.weights.T)
    a = np.exp(special.xlogy(vb[None], pv[:, None]) + special.xlog1py(1 - vb[None], -pv[:, None])).prod(axis=2)
    ph = special.expit(params.hidden_bias + vb @ params.weights)
    b = np.exp(special.xlogy(hb[None], ph[:, None]) + special.xlog1py(1 - hb[None], -ph[:, None])).prod(axis=2)
    return a, b


def transition_matrix(params):
    """Dense sweep kernel on all 2^{n+n'} configurations."""
    n, m = params.n, params.n_hidden
    if n + m > MAX_MATRIX_UNITS:
        raise ValueError(f"dense sweep kernel needs n + n' <= {MAX_MATRIX_UNITS}, got {n + m}")
    a, b = _layer_kernels(params)
    # rows k = v + h 2^n, columns k' = v' + h' 2^n; P[k, k'] = A[h, v'] B[v', h']
    per_h = (a[:, :, None] * b[None, :, :]).transpose(0, 2, 1).reshape(1 << m, -1)
    return np.repeat(per_h, 1 << n, axis=0)


def evolve_law(params, mu, t, kernels=None):
    """mu P^t without forming P: only the hidden marginal drives the next sweep."""
    n, m = params.n, params.n_hidden
    a, b = _layer_kernels(params) if kernels is None else kernels
    mu = np.asarray(mu, dtype=float)
    for _ in range(t):
        nu_h = mu.reshape(1 << m, 1 << n).sum(axis=1)
        joint = (nu_h @ a)[:, None] * b
        mu = joint.T.reshape(-1)
    return mu


def pushforward_hidden_mean(params, mu):
    """Law of s_h(Y) on {0, 1/n', ..., 1} for Y ~ mu."""
    m = params.n_hidden
    counts = _bits(1 << m, m).sum(axis=1)
    nu_h = np.asarray(mu).reshape(1 << m, -1).sum(axis=1)
    return np.bincount(counts, weights=nu_h, minlength=m + 1)


def pushforward_visible_mean(params, mu):
    n = params.n
    counts = _bits(1 << n, n).sum(axis=1)
    nu_v = np.asarray(mu).reshape(-1, 1 << n).sum(axis=0)
    return np.bincount(counts, weights=nu_v, minlength=n + 1)


@dataclass
class EquivalenceReport:
    c: float
    n: int
    t_max: int
    max_error: float
    max_sandwich_excess: float

    @property
    def ok(self):
        return self.max_error <= 1e-10 and self.max_sandwich_excess <= 1e-12


def equivalence_check(c, n, t, starts=None):
    """Compare s_h of the exact sweep law with K^{2s} for s = 0..t.

    ``starts`` lists configuration indices; by default every configuration
    when there are at most 256 of them, otherwise the all-zero and all-one
    configurations."""
    if n > 6:
        raise ValueError(f"equivalence oracle needs n <= 6, got {n}")
    params = RbmParams.specialized(c, n)
    size = 1 << (2 * n)
    if starts is None:
        starts = range(size) if size <= 256 else (0, size - 1)
    kernels = _layer_kernels(params)
    cp = chain.ChainParams(c, n)
    k2 = np.linalg.matrix_power(np.asarray(chain.build_kernel(cp)), 2)
    pi_x = chain.stationary(cp)
    law = exact_law(params).probs
    err = excess = 0.0
    hidden_count = _bits(size, 2 * n)[:, n:].sum(axis=1)
    for k in starts:
        mu = np.zeros(size)
        mu[k] = 1.0
        x = chain.point_mass(n, int(hidden_count[k]))
        for s in range(t + 1):
            err = max(err, float(np.max(np.abs(pushforward_hidden_mean(params, mu) - x))))
            excess = max(excess, chain.tv_distance(x, pi_x) - chain.tv_distance(mu, law))
            mu = evolve_law(params, mu, 1, kernels)
            x = x @ k2
    return EquivalenceReport(c=c, n=n, t_max=t, max_error=err, max_sandwich_excess=excess)


def stationarity_defect(params):
    """max |law P - law| for the sweep kernel."""
    law = exact_law(params).probs
    return float(np.max(np.abs(evolve_law(params, law, 1) - law)))


def detailed_balance_defect(params):
    """max |p(y) P(y, y') - p(y') P(y', y)| of the full sweep kernel.

    A systematic two-block sweep is generally not reversible, so this is a
    diagnostic rather than an invariant."""
    law = exact_law(params).probs
    flow = law[:, None] * transition_matrix(params)
    return float(np.max(np.abs(flow - flow.T)))


def hidden_chain_defect(params):
    """Detailed-balance defect of the hidden-layer chain h -> v' -> h'
    against the hidden marginal of the Boltzmann law."""
    a, b = _layer_kernels(params)
    q = a @ b
    law = exact_law(params).probs
    nu = law.reshape(1 << params.n_hidden, 1 << params.n).sum(axis=1)
    flow = nu[:, None] * q
    return float(np.max(np.abs(flow - flow.T)))


def visible_conditionals(params):
    """P(v_i = 1 | hidden = h) for every hidden configuration; shape (2^{n'}, n)."""
    hb = _bits(1 << params.n_hidden, params.n_hidden).astype(float)
    return special.expit(params.visible_bias + hb @ params.weights.T), hb.mean(axis=1)


def mean_only_dependence_defect(c, n):
    """max |P(v_i = 1 | h) - sigma(c s_h(h))| over all h and i for the
    specialized parameters."""
    probs, means = visible_conditionals(RbmParams.specialized(c, n))
    return float(np.max(np.abs(probs - special.expit(c * means)[:, None])))
