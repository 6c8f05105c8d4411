"""Deterministic-backoff convergence: all-ECA vs ECA with one legacy station."""

import argparse

from macsim.kernel import S
from macsim.sim import SimConfig, simulate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--duration", type=float, default=30.0)
    args = ap.parse_args()

    dur = round(args.duration * S)
    for legacy in (0, 1):
        print(f"legacy stations: {legacy}")
        for seed in range(1, args.seeds + 1):
            cfg = SimConfig(n_stations=args.n, flags=frozenset({"eca"}), seed=seed,
                            duration=dur, legacy_stations=legacy, late_mark=10 * S)
            res = simulate(cfg)
            conv = "never" if res.converged_at is None else f"{res.converged_at / 1e6:.1f} ms"
            print(f"  seed {seed:>2}: converged {conv:>10}, collisions after: "
                  f"{res.collisions_after_convergence}, after 10 s: {res.collisions_after_mark}")


if __name__ == "__main__":
    main()
