"""Single-round collision probability vs station count for the EDCA window sizes.

Writes plot-ready CSV (w,n,p_collision) and prints where each curve crosses 50%.
"""

import argparse
from pathlib import Path

from macsim.analytic import probability_curve
from macsim.experiment import analytic_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nmax", type=int, default=30)
    ap.add_argument("--out", default="results/collision_curves.csv")
    args = ap.parse_args()

    windows = [4, 8, 16, 32]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(analytic_csv(windows, args.nmax))
    for w in windows:
        curve = probability_curve(w, args.nmax)
        half = next((n for n, p in curve if p > 0.5), None)
        print(f"w={w:>2}: p(n=5)={curve[4][1]:.4f}  first n above 0.5: {half}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
