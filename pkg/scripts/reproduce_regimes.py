"""Exact mixing times across the three regimes and the trend fits behind them.

    python scripts/reproduce_regimes.py [--out regimes.csv]
"""

import argparse
import math

import numpy as np

from mixinglab import chain, dynsys, spectral
from mixinglab.numerics import linear_fit

GRIDS = {
    "attractive (c=1)": (1.0, [16, 32, 64, 128, 256, 512, 1024]),
    "critical (c=c_star)": (dynsys.c_star(), [16, 32, 64, 128, 256]),
    "repelling (c=-8)": (-8.0, list(range(8, 41, 4))),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--eps", type=float, default=0.25)
    parser.add_argument("--out", help="optional CSV of (regime, c, n, tau, gap_K2)")
    args = parser.parse_args()

    rows = []
    for label, (c, ns) in GRIDS.items():
        taus, gaps = [], []
        for n in ns:
            params = chain.ChainParams(c, n)
            kernel = chain.build_kernel(params)
            taus.append(chain.exact_mixing_time(params, args.eps, kernel=kernel))
            gaps.append(spectral.spectrum(kernel).gap_K2)
            rows.append((label, c, n, taus[-1], gaps[-1]))
        print(f"{label}")
        for n, t, g in zip(ns, taus, gaps):
            print(f"  n={n:5d}  tau={t!s:>6}  G(K^2)={g:.6f}")
        if c > 0:
            print(f"  tau(2n) - tau(n): {[b - a for a, b in zip(taus, taus[1:])]}")
        elif math.isclose(c, dynsys.c_star()):
            slope, _, r2 = linear_fit(np.log(ns), np.log(taus))
            print(f"  log tau vs log n: slope {slope:.4f}, R^2 {r2:.4f}")
        else:
            slope, _, r2 = linear_fit(ns, np.log(taus))
            print(f"  ln tau vs n: slope {slope:.4f}, R^2 {r2:.4f}")

    if args.out:
        with open(args.out, "w") as fh:
            fh.write("regime,c,n,tau,gap_K2\n")
            for label, c, n, t, g in rows:
                fh.write(f"{label},{c!r},{n},{t},{g!r}\n")


if __name__ == "__main__":
    main()
