"""Collision rate and goodput vs network density for every protocol combination.

Desk-scale default: n in {5..30}, 10 seeds, 30 s runs. Use --quick for a
short smoke sweep. Prints a compact table of the aggregate means.
"""

import argparse
import csv
import io
import time
from pathlib import Path

from macsim import config
from macsim.experiment import aggregate_csv, default_jobs, run_sweep, write_outputs


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config")
    ap.add_argument("--out", default="results/density_sweep")
    ap.add_argument("--jobs", type=int, default=default_jobs())
    ap.add_argument("--quick", action="store_true", help="n in {10,20,30}, 3 seeds, 5 s")
    args = ap.parse_args()

    over = {}
    if args.quick:
        over = {"simulation.stations": "10,20,30", "simulation.seeds": "1-3",
                "simulation.duration_s": "5"}
    sc = config.load(args.config, over)
    t0 = time.time()
    results = run_sweep(sc, jobs=args.jobs)
    write_outputs(sc, results, args.out)
    print(f"{len(results)} runs in {time.time() - t0:.0f} s -> {args.out}")

    rows = list(csv.DictReader(io.StringIO(aggregate_csv(sc, results))))
    print(f"{'protocol':<14}{'n':>4}{'coll/rx':>10}{'goodput Mb/s':>14}")
    for r in rows:
        print(f"{r['protocol']:<14}{r['n_stations']:>4}{float(r['collision_rate_mean']):>10.3f}"
              f"{float(r['goodput_mean_bps']) / 1e6:>14.2f}")


if __name__ == "__main__":
    main()
