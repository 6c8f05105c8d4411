"""Sweep execution: fan (combo, n, seed) cells out, merge rows deterministically."""

from __future__ import annotations

import csv
import io
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .analytic import ContentionRound, collision_probability
from .config import Scenario
from .mac import combo_name
from .metrics import AGGREGATE_COLUMNS, RUN_COLUMNS, aggregate, format_value, run_row
from .sim import simulate

FAILED = "failed"


@dataclass
class CellResult:
    combo_index: int
    n: int
    seed: int
    row: dict
    failed: bool = False
    error: str = ""
    conservation_gap: int = 0


def run_cell(sc: Scenario, combo_index: int, n: int, seed: int,
             trace_dir: Optional[str] = None) -> CellResult:
    combo = sc.combos[combo_index]
    name = combo_name(combo)
    try:
        res = simulate(sc.sim_config(combo, n, seed, trace=trace_dir is not None))
        if trace_dir is not None:
            res.channel.write_trace(Path(trace_dir) / f"{name}_n{n}_seed{seed}.csv")
        return CellResult(combo_index, n, seed, run_row(name, n, seed, res.metrics),
                          conservation_gap=res.metrics.conservation_gap())
    except Exception:  # a failing cell must not take the sweep down
        row = {c: FAILED for c in RUN_COLUMNS}
        row.update(protocol=name, n_stations=n, seed=seed)
        return CellResult(combo_index, n, seed, row, failed=True, error=traceback.format_exc())


def _run_star(args):
    return run_cell(*args)


def run_sweep(sc: Scenario, jobs: int = 1, trace_dir: Optional[str] = None) -> list[CellResult]:
    cells = [(sc, c, n, s, trace_dir) for c, n, s in sc.cells()]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_star, cells, chunksize=1))
    else:
        results = [_run_star(c) for c in cells]
    results.sort(key=lambda r: (r.combo_index, r.n, r.seed))
    return results


def _csv_text(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(row[c]) for c in columns])
    return buf.getvalue()


def runs_csv(results: list[CellResult]) -> str:
    return _csv_text(RUN_COLUMNS, [r.row for r in results])


def aggregate_csv(sc: Scenario, results: list[CellResult]) -> str:
    ok = [r.row for r in results if not r.failed]
    order = {combo_name(c): i for i, c in enumerate(sc.combos)}
    rows = sorted(aggregate(ok), key=lambda a: (order[a["protocol"]], a["n_stations"]))
    return _csv_text(AGGREGATE_COLUMNS, rows)


def write_outputs(sc: Scenario, results: list[CellResult], out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(sc.to_ini())
    (out / "runs.csv").write_text(runs_csv(results))
    (out / "aggregate.csv").write_text(aggregate_csv(sc, results))


def analytic_csv(w_list: list[int], n_max: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["w", "n", "p_collision"])
    for win in w_list:
        for n in range(1, n_max + 1):
            w.writerow([win, n, repr(collision_probability(ContentionRound(n, win)))])
    return buf.getvalue()


def default_jobs() -> int:
    return max(1, os.cpu_count() or 1)
