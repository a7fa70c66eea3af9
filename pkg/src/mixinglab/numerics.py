"""Special functions and log-space arithmetic shared by the other modules.

Everything here accepts scalars or numpy arrays. Probability vectors are
assembled as log weights and only exponentiated after a max shift, since
``(1 + e^{cx})^n`` overflows double precision for modest ``n``.
"""

import math

import numpy as np
from scipy import special, stats


def _check_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"{name} must be > 0, got {x!r}")
    return arr


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    arr = _check_positive(x)
    if arr.ndim == 0:
        return math.lgamma(float(arr))
    return special.gammaln(arr)


def trigamma(x):
    """psi^(1)(x) = sum_k 1/(x+k)^2 for x > 0."""
    arr = _check_positive(x)
    out = special.polygamma(1, arr)
    return float(out) if arr.ndim == 0 else out


def log_sum_exp(xs):
    """ln sum(exp(xs)); -inf entries are ignored, all -inf gives -inf."""
    arr = np.asarray(xs, dtype=float)
    if arr.size == 0:
        raise ValueError("log_sum_exp of an empty sequence")
    top = np.max(arr)
    if top == -np.inf:
        return -np.inf
    return float(top + np.log(np.sum(np.exp(arr - top))))


def log_binom_coef(n, k):
    """ln C(n, k), vectorised over k."""
    k = np.asarray(k)
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def log_binom_pmf(n, k, p):
    """ln[C(n,k) p^k (1-p)^(n-k)].

    ``k`` may be an array. The degenerate cases p in {0, 1} return 0 or -inf
    exactly (``xlogy`` treats 0*log 0 as 0).
    """
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > n):
        raise ValueError(f"k must lie in [0, {n}], got {k!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    out = (
        log_binom_coef(n, k_arr)
        + special.xlogy(k_arr, p)
        + special.xlog1py(n - k_arr, -p)
    )
    return float(out) if k_arr.ndim == 0 else out


def log_sigmoid(z):
    """ln sigma(z), stable for large |z|."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=float))


def sigmoid(z):
    return special.expit(z)


def normalize_log_weights(log_w):
    """Exponentiate log weights after a max shift and normalise to sum 1."""
    log_w = np.asarray(log_w, dtype=float)
    return np.exp(log_w - special.logsumexp(log_w))


def linear_fit(x, y):
    """Least-squares line through (x, y): returns (slope, intercept, r_squared)."""
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(res.slope), float(res.intercept), float(res.rvalue) ** 2
