"""The deterministic map x -> m_c(x) = sigma(c x) on [0, 1].

Its fixed point and the derivative there decide which of the three mixing
regimes the Gibbs chain is in: attractive (|m'| < 1), critical (|m'| = 1)
or repelling (|m'| > 1).
"""

from dataclasses import dataclass
from enum import Enum
import functools
import math

import numpy as np
from scipy import optimize
from scipy.special import expit

REGIME_TOL = 1e-9
DEFAULT_HORIZON = 10**6


class RegimeError(ValueError):
    """An analysis was requested outside the regime it is valid for."""


class Regime(str, Enum):
    ATTRACTIVE = "Attractive"
    CRITICAL = "Critical"
    REPELLING = "Repelling"


@dataclass(frozen=True)
class CriticalConstants:
    x_star: float
    c_star: float


@dataclass(frozen=True)
class DynReport:
    c: float
    fixed_point: float
    deriv_at_fp: float
    deriv2_at_fp: float
    regime: Regime


def _sigma(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def m(c, x):
    """m_c(x) = 1 / (1 + exp(-c x)); vectorised over x."""
    if np.ndim(x) == 0:
        return _sigma(c * float(x))
    return expit(c * np.asarray(x, dtype=float))


def m_prime(c, x):
    s = m(c, x)
    return c * s * (1 - s)


def m2_prime(c, x):
    """Derivative of m_c(m_c(x)): c^2 sigma'(cx) sigma'(c sigma(cx))."""
    s = m(c, x)
    s2 = m(c, s)
    return c * c * s * (1 - s) * s2 * (1 - s2)


def x0_residual(x):
    return x * math.exp(x) / (1.0 + math.exp(x)) - 1.0


def _bisect(f, lo, hi, tol=0.0, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or hi - lo <= tol:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@functools.lru_cache(maxsize=None)
def solve_critical_constants():
    """Root of x e^x / (1 + e^x) = 1 on [1, 2], and c_star = -1 - x - e^x."""
    x_star = _bisect(x0_residual, 1.0, 2.0)
    return CriticalConstants(x_star=x_star, c_star=-1.0 - x_star - math.exp(x_star))


def c_star():
    return solve_critical_constants().c_star


def fixed_point(c):
    """Unique x in [0, 1] with m_c(x) = x (bisection, tol 1e-14)."""
    c = float(c)
    return _bisect(lambda x: _sigma(c * x) - x, 0.0, 1.0, tol=1e-14)


def classify_c(c, tol=REGIME_TOL):
    """Regime decided by comparing c against c_star."""
    cs = c_star()
    if abs(c - cs) <= tol:
        return Regime.CRITICAL
    return Regime.ATTRACTIVE if c > cs else Regime.REPELLING


def report(c, tol=REGIME_TOL):
    xs = fixed_point(c)
    d1 = m_prime(c, xs)
    gap = abs(d1) - 1.0
    if gap < -tol:
        regime = Regime.ATTRACTIVE
    elif gap > tol:
        regime = Regime.REPELLING
    else:
        regime = Regime.CRITICAL
    return DynReport(c=c, fixed_point=xs, deriv_at_fp=d1, deriv2_at_fp=m2_prime(c, xs), regime=regime)


def iterate(c, x0, t):
    """[m^0(x0), ..., m^t(x0)]."""
    out = [float(x0)]
    for _ in range(t):
        out.append(_sigma(c * out[-1]))
    return out


def dyn_mixing_time(c, x, eps, horizon=DEFAULT_HORIZON):
    """First t after which every iterate stays within eps of the fixed point.

    Returns ``math.inf`` when the orbit is still outside the band at the
    horizon. For c >= c_star, m_c^2 is non-expansive around the fixed point,
    so two consecutive in-band iterates end the search early.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps!r}")
    xs = fixed_point(c)
    may_stop_early = classify_c(c) is not Regime.REPELLING
    y = float(x)
    first_inside = None
    run = 0
    for t in range(horizon + 1):
        if abs(y - xs) < eps:
            if first_inside is None:
                first_inside = t
            run += 1
            if may_stop_early and run >= 2:
                return first_inside
        else:
            first_inside = None
            run = 0
        y = _sigma(c * y)
    return first_inside if first_inside is not None else math.inf


def sup_m2_prime(c, grid_size=10**5):
    """max over [0, 1] of (m_c^2)'; dense grid then bounded Brent refinement."""
    xs = np.linspace(0.0, 1.0, grid_size + 1)
    vals = m2_prime(c, xs)
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, grid_size)]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda x: -m2_prime(c, x), bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-13},
        )
        best = max(best, -float(res.fun))
    return best


def critical_identities(c=None):
    """Residuals of the three fixed-point identities that hold at c_star:
    1 = -c x(1-x),  e^{cx} = -cx - 1,  e^{-cx} = -1 - c + cx."""
    c = c_star() if c is None else c
    x = fixed_point(c)
    return (
        1.0 + c * x * (1 - x),
        math.exp(c * x) - (-c * x - 1.0),
        math.exp(-c * x) - (-1.0 - c + c * x),
    )


def n_infty_g(x, c=None):
    """g(x) = c^2 x(1-x) - e^{-cx}(1 + e^{cx})^2, non-positive at c_star."""
    c = c_star() if c is None else c
    x = np.asarray(x, dtype=float)
    return c * c * x * (1 - x) - np.exp(-c * x) * (1 + np.exp(c * x)) ** 2


def m2t_neighborhood(c=None, grid_size=20001):
    """Half-width delta of a neighbourhood N of the critical fixed point on
    which delta * sup_N |(m^2)''| < 1 (the hypothesis used for the 1/(2t)
    escape bound)."""
    c = c_star() if c is None else c
    xs = fixed_point(c)
    delta = min(xs, 1 - xs)
    while True:
        grid = np.linspace(xs - delta, xs + delta, grid_size)
        curv = np.max(np.abs(np.gradient(m2_prime(c, grid), grid)))
        if delta * curv < 1:
            return delta
        delta /= 2


def m2t_check(c=None, t_max=100, points=201):
    """Worst-case ratio |m^{2t}(x) - x*| / (|x - x*| / (2t)) over a grid in
    the neighbourhood N and 1 <= t <= t_max. The bound holds iff >= 1."""
    c = c_star() if c is None else c
    xs = fixed_point(c)
    delta = m2t_neighborhood(c)
    offsets = np.linspace(-delta, delta, points + 2)[1:-1]
    offsets = offsets[np.abs(offsets) > 1e-6]
    y = xs + offsets
    worst = math.inf
    for t in range(1, t_max + 1):
        y = m(c, m(c, y))
        ratio = np.abs(y - xs) / (np.abs(offsets) / (2 * t))
        worst = min(worst, float(np.min(ratio)))
    return worst
