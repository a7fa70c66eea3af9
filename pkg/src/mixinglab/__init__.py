"""Exact and simulated mixing analysis of a two-layer Gibbs sampler reduced
to its layer-mean chain."""

from .chain import ChainParams, build_kernel, exact_mixing_time, stationary
from .dynsys import Regime, RegimeError, c_star, fixed_point

__version__ = "0.1.0"

__all__ = [
    "ChainParams", "Regime", "RegimeError", "build_kernel", "c_star",
    "exact_mixing_time", "fixed_point", "stationary",
]
