"""``macsim`` command line: ``simulate`` sweeps and ``analytic`` curves.

Exit codes: 0 success, 1 at least one run failed (partial output kept),
2 invalid configuration or arguments. ``MACSIM_OUT`` overrides the default
output directory; an explicit ``--out`` wins over it.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import config as cfgmod
from .experiment import analytic_csv, run_sweep, write_outputs

DEFAULT_OUT = "results"
OUT_ENV = "MACSIM_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="macsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a density x protocol x seed sweep")
    s.add_argument("--config", help="INI scenario file (every key has a default)")
    s.add_argument("--stations", help="station counts, e.g. '10,20,30' or '5-8'")
    s.add_argument("--protocols", help="combos, e.g. 'legacy,eca,eicw+tdu'")
    s.add_argument("--seeds", help="seed list, e.g. '1-10'")
    s.add_argument("--duration", help="simulated seconds per run")
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    s.add_argument("--trace", action="store_true", help="write per-run transmission logs")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    a = sub.add_parser("analytic", help="single-round collision probability curves")
    a.add_argument("--w", default="4,8,16,32", help="contention window sizes")
    a.add_argument("--nmax", type=int, default=30, help="largest station count")
    a.add_argument("--out", help="CSV file (default stdout)")
    return p


def _simulate(args) -> int:
    overrides = {}
    for flag, key in (("stations", "simulation.stations"), ("protocols", "simulation.protocol"),
                      ("seeds", "simulation.seeds"), ("duration", "simulation.duration_s")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if args.jobs < 1:
        print("macsim: --jobs: must be >= 1", file=sys.stderr)
        return 2
    try:
        sc = cfgmod.load(args.config, overrides)
    except cfgmod.ConfigError as exc:
        print(f"macsim: invalid configuration: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    trace_dir = None
    if args.trace:
        trace_dir = out / "traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
    results = run_sweep(sc, jobs=args.jobs, trace_dir=str(trace_dir) if trace_dir else None)
    write_outputs(sc, results, str(out))
    failed = [r for r in results if r.failed]
    for r in failed:
        print(f"macsim: run {r.row['protocol']} n={r.n} seed={r.seed} failed:\n{r.error}",
              file=sys.stderr)
    print(f"{len(results)} runs -> {out}", file=sys.stderr)
    return 1 if failed else 0


def _analytic(args) -> int:
    try:
        w_list = cfgmod.parse_int_list(args.w)
        if not w_list or any(w < 1 for w in w_list):
            raise ValueError("window sizes must be >= 1")
        if args.nmax < 1:
            raise ValueError("--nmax must be >= 1")
    except ValueError as exc:
        print(f"macsim: {exc}", file=sys.stderr)
        return 2
    text = analytic_csv(w_list, args.nmax)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return _simulate(args)
    return _analytic(args)


if __name__ == "__main__":
    sys.exit(main())
