"""Shared single-collision-domain channel.

Sensing is perfect and instantaneous. Any time overlap between two frames
destroys both (no capture). Intervals are half-open ``[start, end)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .kernel import S, us


class Outcome(str, Enum):
    DELIVERED = "delivered"
    COLLIDED = "collided"


@dataclass(frozen=True)
class PhyProfile:
    slot_time: int = us(9)
    sifs: int = us(16)
    data_rate: int = 65_000_000
    ack_duration: int = us(44)
    header_overhead: int = 1600

    def __post_init__(self):
        if self.slot_time <= 0 or self.sifs <= 0:
            raise ValueError("slot_time and sifs must be positive")
        if self.data_rate <= 0:
            raise ValueError("data_rate must be positive")

    def frame_duration(self, payload_bits: int) -> int:
        bits = self.header_overhead + payload_bits
        return -(-bits * S // self.data_rate)

    @property
    def ack_timeout(self) -> int:
        return self.sifs + self.ack_duration + self.slot_time


@dataclass(eq=False)
class TxRecord:
    station_id: int
    start: int
    end: int
    payload_bits: int
    is_ack: bool = False
    overlapped: bool = False
    counted: bool = False
    outcome: Optional[Outcome] = None
    packet: object = field(default=None, repr=False)

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"empty transmission interval [{self.start}, {self.end})")


class Channel:
    def __init__(self, phy: PhyProfile, keep_log: bool = False):
        self.phy = phy
        self.active: list[TxRecord] = []
        self.keep_log = keep_log
        self.log: list[TxRecord] = []

    def sense(self, at: int) -> str:
        records = self.log if self.keep_log else self.active
        for rec in records:
            if rec.start <= at < rec.end:
                return "busy"
        return "idle"

    @property
    def busy(self) -> bool:
        return bool(self.active)

    def begin_tx(self, station_id: int, payload_bits: int, at: int, *, is_ack: bool = False,
                 packet=None) -> TxRecord:
        if is_ack:
            end = at + self.phy.ack_duration
        else:
            end = at + self.phy.frame_duration(payload_bits)
        rec = TxRecord(station_id, at, end, payload_bits, is_ack=is_ack, packet=packet)
        # frames already finished by `at` cannot overlap; retire them
        still_on_air = []
        for other in self.active:
            if other.end <= at:
                self._finish(other)
            else:
                still_on_air.append(other)
        for other in still_on_air:
            other.overlapped = True
            rec.overlapped = True
        still_on_air.append(rec)
        self.active = still_on_air
        if self.keep_log:
            self.log.append(rec)
        return rec

    def _finish(self, rec: TxRecord) -> Outcome:
        if rec.outcome is None:
            rec.outcome = Outcome.COLLIDED if rec.overlapped else Outcome.DELIVERED
        return rec.outcome

    def resolve_outcomes(self, ending: TxRecord) -> Outcome:
        """Settle ``ending`` at its end instant and take it off the air."""
        outcome = self._finish(ending)
        if ending in self.active:
            self.active.remove(ending)
        return outcome

    def ack_start(self, rec: TxRecord) -> Optional[int]:
        if rec.is_ack or rec.outcome is not Outcome.DELIVERED:
            return None
        return rec.end + self.phy.sifs

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["station", "start_ns", "end_ns", "bits", "outcome"])
            for rec in self.log:
                if rec.is_ack:
                    outcome = "ack"
                else:
                    outcome = rec.outcome.value if rec.outcome else "in-flight"
                w.writerow([rec.station_id, rec.start, rec.end, rec.payload_bits, outcome])
