"""Critical-regime diagnostics: exact tau, the numerical gap of K^2, and the
worst-case TV bound that the gap implies, for a range of n.

    python scripts/critical_scaling.py [--n 32 64 128 256]
"""

import argparse
import math

import numpy as np

from mixinglab import chain, dynsys, spectral
from mixinglab.numerics import linear_fit


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--n", type=int, nargs="+", default=[32, 64, 128, 256])
    args = parser.parse_args()
    c = dynsys.c_star()
    gaps = []
    for n in args.n:
        params = chain.ChainParams(c, n)
        kernel = chain.build_kernel(params)
        gap = spectral.spectrum(kernel).gap_K2
        gaps.append(gap)
        tau = chain.exact_mixing_time(params, kernel=kernel)
        # smallest even t where the sharp bound from the worst point mass drops below 1/4
        lchi = max(spectral.log_chi_norm(params, chain.point_mass(n, j)) for j in (0, n))
        t_bound = 2 * math.ceil((math.log(0.25) - math.log(0.5) - lchi) / math.log1p(-gap))
        print(f"n={n:5d}  tau={tau:5d}  G(K^2)={gap:.3e}  bound-implied tau<={t_bound}  "
              f"worst-case gap log10={spectral.theoretical_gap_log(n, c) / math.log(10):.1f}")
    slope, _, r2 = linear_fit(np.log(args.n), np.log(gaps))
    print(f"log G vs log n: slope {slope:.3f}, R^2 {r2:.4f}")


if __name__ == "__main__":
    main()
