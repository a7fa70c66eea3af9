"""Spectral gap of K^2, conductance, and the critical-case TV bound.

K is reversible with respect to pi, so D^{1/2} K D^{-1/2} (D = diag(pi)) is
symmetric and the spectrum of K is real. The symmetrisation is done from the
log-space kernel so that states whose stationary mass underflows are kept.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import special

from . import chain
from .dynsys import Regime, RegimeError

REVERSIBILITY_TOL = 1e-9
BRUTE_FORCE_MAX_N = 20


class ReversibilityError(ValueError):
    pass


class ConductanceMode(str, Enum):
    BRUTE_FORCE = "BruteForce"
    INTERVAL_CUTS = "IntervalCuts"


@dataclass(frozen=True, eq=False)
class SpectralReport:
    params: chain.ChainParams
    eigenvalues: np.ndarray
    gap_K2: float
    lambda2_abs: float


@dataclass(frozen=True)
class ConductanceReport:
    phi: float
    argmin_set: tuple
    mode: ConductanceMode


def _log_pi(kernel, pi):
    if pi is None:
        return chain.log_stationary(kernel.params)
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(pi, dtype=float))


def symmetrized(kernel, pi=None):
    """S = D^{1/2} K D^{-1/2}, built as exp(log pi_i/2 + log K_ij - log pi_j/2)."""
    log_pi = _log_pi(kernel, pi)
    defect = chain.detailed_balance_defect(kernel, log_pi)
    if not defect <= REVERSIBILITY_TOL:
        raise ReversibilityError(f"detailed balance violated: max log defect {defect:.3e}")
    half = 0.5 * log_pi
    s = np.exp(half[:, None] + kernel.log_rows - half[None, :])
    return 0.5 * (s + s.T)


def spectrum(kernel, pi=None):
    eig = np.linalg.eigvalsh(symmetrized(kernel, pi))
    top = int(np.argmax(eig))
    if abs(eig[top] - 1.0) > 1e-9:
        raise np.linalg.LinAlgError(f"leading eigenvalue {eig[top]!r} is not 1")
    rest = np.delete(eig, top)
    lam2 = float(np.max(np.abs(rest))) if rest.size else 0.0
    return SpectralReport(
        params=kernel.params, eigenvalues=eig, gap_K2=1.0 - lam2 * lam2, lambda2_abs=lam2
    )


def two_step_flow(kernel, pi=None):
    """Q(x, y) = pi(x) K^2(x, y)."""
    pi = chain.stationary(kernel.params) if pi is None else np.asarray(pi)
    k = np.asarray(kernel)
    return pi[:, None] * (k @ k), pi


def conductance_bruteforce(kernel, pi=None, chunk=1 << 15):
    """Exact Phi(K^2): infimum of Q(A, A^c) / (pi(A) pi(A^c)) over all A."""
    n = kernel.params.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"exhaustive conductance needs n <= {BRUTE_FORCE_MAX_N}, got {n}")
    q, pi = two_step_flow(kernel, pi)
    size = n + 1
    shifts = np.arange(size, dtype=np.int64)
    best, best_mask = math.inf, None
    total = 1 << size
    for start in range(1, total - 1, chunk):
        masks = np.arange(start, min(start + chunk, total - 1), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(float)
        comp = 1.0 - bits
        flow = np.sum((bits @ q) * comp, axis=1)
        pa, pc = bits @ pi, comp @ pi
        valid = (pa > 0) & (pc > 0)
        if not np.any(valid):
            continue
        ratio = np.where(valid, flow / np.where(valid, pa * pc, 1.0), np.inf)
        i = int(np.argmin(ratio))
        if ratio[i] < best:
            best, best_mask = float(ratio[i]), int(masks[i])
    members = tuple(j for j in range(size) if best_mask >> j & 1)
    return ConductanceReport(phi=best, argmin_set=members, mode=ConductanceMode.BRUTE_FORCE)


def interval_cut_ratios(kernel, pi=None):
    """Conductance ratio of each threshold set A_k = {0, ..., k}, k < n."""
    q, pi = two_step_flow(kernel, pi)
    from_left = np.cumsum(q, axis=0)
    # flow_k = sum_{i <= k, j > k} Q[i, j]
    tail = np.cumsum(from_left[:, ::-1], axis=1)[:, ::-1]
    n = kernel.params.n
    flow = np.array([tail[k, k + 1] for k in range(n)])
    pa = np.cumsum(pi)[:-1]
    pc = np.cumsum(pi[::-1])[::-1][1:]
    return flow / (pa * pc)


def conductance_interval(kernel, pi=None):
    """Upper bound on Phi(K^2) from the n threshold cuts."""
    ratios = interval_cut_ratios(kernel, pi)
    k = int(np.argmin(ratios))
    return ConductanceReport(
        phi=float(ratios[k]), argmin_set=tuple(range(k + 1)), mode=ConductanceMode.INTERVAL_CUTS
    )


def iso_conductance_lower_bound(n, c, step=1e-3):
    """Best lower bound on Phi(K^2) from the close-coupling constant e^c and
    the isoperimetric constant 1/(e^100 n^2), maximised over a grid of a."""
    eps = math.exp(c)
    kappa = math.exp(-100.0) / n**2
    a = np.arange(step, 1.0, step)
    return float(eps * np.max(np.minimum((1 - a) / 2, a * a * kappa / 4)))


def log_chi_norm(params, start):
    """log || d mu / d pi - 1 ||_{L^2(pi)}; -inf when mu = pi."""
    mu = np.asarray(start, dtype=float)
    log_pi = chain.log_stationary(params)
    support = mu > 0
    total = special.logsumexp(2 * np.log(mu[support]) - log_pi[support])
    if total <= 1e-15:
        return -math.inf
    return 0.5 * (total + math.log(-math.expm1(-total)))


@dataclass(frozen=True)
class CriticalBound:
    log_chi_norm: float
    log_theory: float
    log_sharp: float

    @property
    def theory(self):
        return math.exp(self.log_theory)

    @property
    def sharp(self):
        return math.exp(self.log_sharp)


def theoretical_gap_log(n, c):
    """log of e^{2c} / (2048 e^{200} n^4)."""
    return 2 * c - math.log(2048) - 200.0 - 4 * math.log(n)


def critical_tv_bound(params, start, t, gap_K2=None):
    """Upper bounds on TV(mu K^t, pi) at c_star.

    ``log_theory`` uses the worst-case gap e^{2c}/(2048 e^{200} n^4);
    ``log_sharp`` substitutes the numerically computed G(K^2).
    """
    if params.regime is not Regime.CRITICAL:
        raise RegimeError(f"critical bound requires c = c_star, got c = {params.c}")
    if params.n <= 20:
        raise ValueError("critical bound requires n > 20")
    if gap_K2 is None:
        gap_K2 = spectrum(chain.build_kernel(params)).gap_K2
    half_t = t // 2
    lchi = log_chi_norm(params, start)
    g = math.exp(theoretical_gap_log(params.n, params.c))
    log_theory = math.log(0.5) + lchi + half_t * math.log1p(-g)
    if half_t == 0:
        log_sharp = math.log(0.5) + lchi
    elif gap_K2 >= 1.0:
        log_sharp = -math.inf
    else:
        log_sharp = math.log(0.5) + lchi + half_t * math.log1p(-gap_K2)
    return CriticalBound(log_chi_norm=lchi, log_theory=log_theory, log_sharp=log_sharp)
