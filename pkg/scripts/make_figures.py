"""Write the data behind every figure into one directory.

    python scripts/make_figures.py [--out figures]
"""

import argparse
import sys

from mixinglab import cli


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default="figures")
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    for fig in cli.FIGURE_IDS:
        code = cli.main(["figures", "--id", fig, "--out", args.out, "--seed", str(args.seed)])
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
