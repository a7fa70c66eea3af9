"""Continuous extension of the stationary law and the near-log-concavity and
isoperimetric checks used at c_star.

omega_n(x) = C_n Gamma(n+1) / (Gamma(nx+1) Gamma(n-nx+1)) (1 + e^{cx})^n, with
C_n chosen so that omega_n sums to 1 over Omega_n (so omega_n = pi on the grid).
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import optimize, special

from . import chain
from .dynsys import Regime, RegimeError
from .numerics import trigamma

DEFECT_BOUND = 800.0
ISO_LOG_SLACK = 100.0
GRID = 10**4


class InvalidPartitionError(ValueError):
    pass


@dataclass(frozen=True)
class ExtendedDensity:
    params: chain.ChainParams
    log_c_n: float

    def log_omega(self, x):
        x = _check_unit(x)
        n, c = self.params.n, self.params.c
        out = (
            self.log_c_n
            + special.gammaln(n + 1)
            - special.gammaln(n * x + 1)
            - special.gammaln(n - n * x + 1)
            + n * np.logaddexp(0.0, c * x)
        )
        return float(out) if np.ndim(out) == 0 else out


def _check_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0) & (arr <= 1))):
        raise ValueError(f"x must lie in [0, 1], got {x!r}")
    return arr


def extended_density(params):
    log_c_n = -float(special.logsumexp(chain.log_stationary_weights(params)))
    return ExtendedDensity(params=params, log_c_n=log_c_n)


def log_omega(params, x):
    return extended_density(params).log_omega(x)


def d2_log_omega(params, x):
    """n [c^2 e^{cx}/(1+e^{cx})^2 - n psi1(n - nx + 1) - n psi1(nx + 1)]."""
    x = _check_unit(x)
    n, c = params.n, params.c
    s = special.expit(c * x)
    out = n * (c * c * s * (1 - s) - n * trigamma(n - n * x + 1) - n * trigamma(n * x + 1))
    return float(out) if np.ndim(out) == 0 else out


def h(c, x, y):
    """c^2 e^{cx}/(1+e^{cx})^2 - 1/(1-x+y) - 1/(x+y); d2 log omega_n <= n h(x, 1/n)."""
    s = special.expit(c * np.asarray(x, dtype=float))
    return c * c * s * (1 - s) - 1 / (1 - x + y) - 1 / (x + y)


def dh_dy_bound(x, y_max=1 / 20):
    """sup over y in [0, y_max] of |dh/dy| = 1/(x+y)^2 + 1/(1-x+y)^2 (attained at y = 0)."""
    x = np.asarray(x, dtype=float)
    return 1 / x**2 + 1 / (1 - x) ** 2


def _require_critical(params):
    if params.regime is not Regime.CRITICAL:
        raise RegimeError(f"check requires c = c_star, got c = {params.c}")
    if params.n <= 20:
        raise ValueError(f"check requires n > 20, got n = {params.n}")


@dataclass
class LogConcavityReport:
    n: int
    max_d2: float
    argmax: float
    case1_max_h: float
    case2_max_nh: float
    bridge_max: float

    @property
    def ok(self):
        return (
            self.max_d2 < DEFECT_BOUND
            and self.case1_max_h < 0
            and self.case2_max_nh < DEFECT_BOUND
            and self.bridge_max <= DEFECT_BOUND
        )

    @property
    def log_concave(self):
        return self.max_d2 <= 0


def logconc_defect_check(params, grid=GRID):
    """Maximise d^2/dx^2 log omega_n over a grid plus local refinement, and
    check the two cases of the bound through h(x, 1/n)."""
    _require_critical(params)
    n, c = params.n, params.c
    xs = np.linspace(0.0, 1.0, grid + 1)
    vals = d2_log_omega(params, xs)
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), float(xs[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid)]
    res = optimize.minimize_scalar(
        lambda x: -d2_log_omega(params, x), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    if -res.fun > best:
        best, arg = float(-res.fun), float(res.x)
    edge = (xs <= 0.05) | (xs >= 0.95)
    hv = h(c, xs, 1 / n)
    band = xs[~edge]
    return LogConcavityReport(
        n=n, max_d2=best, argmax=arg,
        case1_max_h=float(np.max(hv[edge])),
        case2_max_nh=float(np.max(n * hv[~edge])),
        bridge_max=float(np.max(dh_dy_bound(band))),
    )


def concavified_d2(params, x):
    """Second derivative of g_n(x) = log omega_n(x) - 400 (x - a1)(x - a2),
    which does not depend on a1, a2."""
    return d2_log_omega(params, x) - DEFECT_BOUND


def validate_partition(labels, n):
    """labels[j] in {1, 2, 3} for j = 0..n; S1 and S2 must be >= 3/(2n) apart,
    i.e. at least two grid steps."""
    labels = np.asarray(labels)
    if labels.shape != (n + 1,):
        raise InvalidPartitionError(f"expected {n + 1} labels, got shape {labels.shape}")
    if not np.all(np.isin(labels, (1, 2, 3))):
        raise InvalidPartitionError("labels must be 1, 2 or 3")
    s1, s2 = np.flatnonzero(labels == 1), np.flatnonzero(labels == 2)
    if s1.size and s2.size:
        gap = int(np.min(np.abs(s1[:, None] - s2[None, :])))
        if 2 * gap < 3:
            raise InvalidPartitionError(
                f"S1 and S2 are {gap}/n apart, need >= 3/(2n) (states {s1.tolist()} vs {s2.tolist()})"
            )
    return labels


def interval_partitions(n):
    """All (S1, S3, S2) = ([0, a], (a, b), [b, 1]) with b - a >= 2."""
    for a in range(n + 1):
        for b in range(a + 2, n + 1):
            labels = np.full(n + 1, 3)
            labels[: a + 1] = 1
            labels[b:] = 2
            yield labels


def random_partitions(n, count, rng):
    """A separating gap of at least one state, then each state left of it
    joins S1 or S3 and each state right of it joins S2 or S3; sides are
    swapped with probability 1/2."""
    for _ in range(count):
        lo = int(rng.integers(0, n + 1))
        hi = int(rng.integers(lo + 1, n + 2))
        p = rng.random()
        idx = np.arange(n + 1)
        labels = np.full(n + 1, 3)
        # the gap [lo, hi) holds at least one state
        left, right = idx < lo, idx >= hi
        labels[left & (rng.random(n + 1) < p)] = 1
        labels[right & (rng.random(n + 1) < p)] = 2
        if rng.random() < 0.5:
            labels = labels[::-1].copy()
        yield labels


def iso_slack(log_pi, labels, n):
    """log pi(S3) - [log pi(S1) + log pi(S2) - 100 - 2 log n]; +inf if S1 or S2 is empty."""
    masses = []
    for k in (1, 2, 3):
        sel = log_pi[labels == k]
        masses.append(float(special.logsumexp(sel)) if sel.size else -math.inf)
    l1, l2, l3 = masses
    if l1 == -math.inf or l2 == -math.inf:
        return math.inf
    return l3 - (l1 + l2 - ISO_LOG_SLACK - 2 * math.log(n))


@dataclass
class IsoReport:
    n: int
    checked: int
    min_slack: float
    worst_labels: np.ndarray
    surrogate_min_slack: float

    @property
    def ok(self):
        return self.min_slack >= 0 and self.surrogate_min_slack >= 0


def surrogate_min_slack(params):
    """min over grid triples a1 < a3 < a2 of log omega(a3) - log omega(a1) - log omega(a2) + 100."""
    lw = chain.log_stationary(params)
    diff = lw[None, :, None] - lw[:, None, None] - lw[None, None, :]
    i, j, k = np.indices(diff.shape)
    mask = (i < j) & (j < k)
    return float(np.min(diff[mask])) + ISO_LOG_SLACK if mask.any() else math.inf


def iso_partition_check(params, partitions=None, random_count=10**4, seed=0):
    """Check the isoperimetric inequality on every interval triple, on
    ``random_count`` random separated partitions, and on any extra label
    arrays passed in ``partitions``."""
    _require_critical(params)
    n = params.n
    log_pi = chain.log_stationary(params)
    rng = np.random.default_rng(seed)
    sources = [interval_partitions(n), random_partitions(n, random_count, rng)]
    if partitions is not None:
        sources.append(iter(partitions))
    checked, worst, worst_labels = 0, math.inf, None
    for source in sources:
        for labels in source:
            labels = validate_partition(labels, n)
            s = iso_slack(log_pi, labels, n)
            checked += 1
            if s < worst:
                worst, worst_labels = s, labels
    return IsoReport(
        n=n, checked=checked, min_slack=worst, worst_labels=worst_labels,
        surrogate_min_slack=surrogate_min_slack(params),
    )
