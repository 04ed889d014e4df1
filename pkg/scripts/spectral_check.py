"""Relative error of the discrete symbol on cos modes as the torus grid is refined.

    python scripts/spectral_check.py --alpha 1.0 --modes 1 2 4 --grids 128 256 512 1024
"""

import argparse

from levyhomog.diagnostics import discrete_symbol, exact_symbol


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--modes", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--grids", type=int, nargs="+", default=[128, 256, 512, 1024])
    ap.add_argument("--R", type=float, default=128.0, help="truncation radius of the torus quadrature")
    args = ap.parse_args()

    print("n," + ",".join(f"k={k}" for k in args.modes))
    for n in args.grids:
        errs = [abs(discrete_symbol(args.alpha, n, k, args.R) / exact_symbol(args.alpha, k) - 1) for k in args.modes]
        print(f"{n}," + ",".join(f"{e:.3e}" for e in errs))


if __name__ == "__main__":
    main()
