"""Run counters, derived measures and cross-run aggregation."""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

from .kernel import S

UNDEFINED = "nan"

RUN_COLUMNS = [
    "protocol", "n_stations", "seed", "duration_s", "tx_attempts", "collisions", "received",
    "collision_rate", "goodput_bps", "timeout_drops", "overflow_drops", "retry_drops",
]
AGGREGATE_COLUMNS = [
    "protocol", "n_stations", "runs", "collision_rate_mean", "collision_rate_ci95",
    "goodput_mean_bps", "goodput_ci95_bps",
]


@dataclass
class RunMetrics:
    """Counters over the measurement window ``[warmup, sim_duration]``.

    Packet bookkeeping (``backlog_start`` .. ``in_flight_end``) closes the
    conservation identity checked by :meth:`conservation_gap`.
    """

    sim_duration: int
    warmup: int = 0
    tx_attempts: int = 0
    collisions: int = 0
    collision_events: int = 0
    received: int = 0
    delivered_payload_bits: int = 0
    timeout_drops: int = 0
    overflow_drops: int = 0
    retry_drops: int = 0
    generated: int = 0
    delivered_packets: int = 0
    backlog_start: int = 0
    in_queue_end: int = 0
    in_flight_end: int = 0
    in_air_end: int = 0

    def conservation_gap(self) -> int:
        inflow = self.backlog_start + self.generated
        outflow = (self.delivered_packets + self.timeout_drops + self.overflow_drops
                   + self.retry_drops + self.in_queue_end + self.in_flight_end)
        return inflow - outflow

    def attempts_gap(self) -> int:
        return self.tx_attempts - (self.collisions + self.received + self.in_air_end)

    def as_dict(self) -> dict:
        return asdict(self)


def collision_rate(m: RunMetrics, count: str = "frames") -> Optional[float]:
    """Collided transmissions per received frame; ``None`` when nothing was received."""
    if m.received == 0:
        return None
    numerator = m.collisions if count == "frames" else m.collision_events
    return numerator / m.received


def goodput(m: RunMetrics) -> float:
    window = m.sim_duration - m.warmup
    if window <= 0:
        raise ValueError("simulation must run past the warmup")
    return m.delivered_payload_bits * S / window


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    ci95: float
    runs: int


def summarize(values: Iterable[Optional[float]]) -> Summary:
    """Mean, sample std and normal-approximation 95% CI half-width.

    Undefined values (``None``) are skipped; a single run has zero CI width.
    """
    vals = sorted(v for v in values if v is not None and not math.isnan(v))
    if not vals:
        return Summary(math.nan, math.nan, math.nan, 0)
    mean = math.fsum(vals) / len(vals)
    if len(vals) == 1:
        return Summary(mean, 0.0, 0.0, 1)
    std = statistics.stdev(vals)
    return Summary(mean, std, 1.96 * std / math.sqrt(len(vals)), len(vals))


def aggregate(rows: Iterable[dict]) -> list[dict]:
    """Group per-run rows by ``(protocol, n_stations)`` and summarise both measures."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["protocol"], int(row["n_stations"])), []).append(row)
    out = []
    for key in sorted(groups):
        runs = groups[key]
        cr = summarize(_num(r["collision_rate"]) for r in runs)
        gp = summarize(_num(r["goodput_bps"]) for r in runs)
        out.append({
            "protocol": key[0],
            "n_stations": key[1],
            "runs": len(runs),
            "collision_rate_mean": cr.mean,
            "collision_rate_ci95": cr.ci95,
            "goodput_mean_bps": gp.mean,
            "goodput_ci95_bps": gp.ci95,
        })
    return out


def _num(value) -> Optional[float]:
    if value is None or value == UNDEFINED or value == "":
        return None
    return float(value)


def run_row(protocol: str, n_stations: int, seed: int, m: RunMetrics) -> dict:
    cr = collision_rate(m)
    return {
        "protocol": protocol,
        "n_stations": n_stations,
        "seed": seed,
        "duration_s": m.sim_duration / S,
        "tx_attempts": m.tx_attempts,
        "collisions": m.collisions,
        "received": m.received,
        "collision_rate": cr,
        "goodput_bps": goodput(m),
        "timeout_drops": m.timeout_drops,
        "overflow_drops": m.overflow_drops,
        "retry_drops": m.retry_drops,
    }


def format_value(value) -> str:
    if value is None:
        return UNDEFINED
    if isinstance(value, float):
        if math.isnan(value):
            return UNDEFINED
        return repr(round(value, 9))
    return str(value)
