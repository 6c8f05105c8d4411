"""Packet sources and bounded-delay FIFO transmit queues."""

from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernel import S, RngStream, ms

TRAFFIC_KINDS = ("saturated-cbr", "web-like-onoff")


@dataclass(frozen=True)
class FlowSpec:
    kind: str = "saturated-cbr"
    packet_bytes: int = 1000
    offered_rate: float = 8e6
    jitter: float = 0.1
    on_mean_s: float = 1.0
    off_mean_s: float = 0.0

    def __post_init__(self):
        if self.kind not in TRAFFIC_KINDS:
            raise ValueError(f"traffic kind must be one of {TRAFFIC_KINDS}, got {self.kind!r}")
        if self.offered_rate <= 0:
            raise ValueError("offered_rate must be positive")
        if self.packet_bytes < 64:
            raise ValueError("packet_bytes must be at least 64")
        if not 0 <= self.jitter < 1:
            raise ValueError("jitter must be in [0, 1)")

    @property
    def packet_bits(self) -> int:
        return 8 * self.packet_bytes

    @property
    def mean_interarrival(self) -> float:
        """Seconds between packets of the underlying cbr stream."""
        return self.packet_bits / self.offered_rate


class ArrivalProcess:
    """Lazy arrival-time generator for one station.

    The cbr stream draws jittered gaps from ``rng``; the web-like variant
    gates that same stream with exponential on/off periods drawn from
    ``gate_rng``, so with zero-length off periods both kinds agree exactly.
    """

    CHUNK = 4096

    def __init__(self, flow: FlowSpec, rng: RngStream, gate_rng: Optional[RngStream] = None,
                 start: int = 0):
        self.flow = flow
        self.rng = rng
        self.gate_rng = gate_rng
        self._mean_ns = flow.mean_interarrival * S
        self._last = float(start)
        self._first = True
        self._buf: list[int] = []
        self._pos = 0
        self._gated = flow.kind == "web-like-onoff" and flow.off_mean_s > 0
        if self._gated and gate_rng is None:
            raise ValueError("web-like traffic needs a gate rng")
        self._on_end = float(start) + self._draw_on() if self._gated else None
        self._off_end = None

    def _draw_on(self) -> float:
        return float(self.gate_rng.exponential(self.flow.on_mean_s * S))

    def _draw_off(self) -> float:
        return float(self.gate_rng.exponential(self.flow.off_mean_s * S))

    def _refill(self) -> None:
        j = self.flow.jitter
        gaps = self._mean_ns * self.rng.uniform(1 - j, 1 + j, self.CHUNK)
        if self._first:
            # random phase so stations are not synchronised
            gaps[0] = self._mean_ns * self.rng.uniform(0, 1)
            self._first = False
        times = self._last + np.cumsum(gaps)
        self._last = float(times[-1])
        out = np.ceil(times).astype(np.int64)
        if self._gated:
            out = out[self._gate_mask(out)]
        self._buf = self._buf[self._pos:] + out.tolist()
        self._pos = 0

    def _gate_mask(self, times: np.ndarray) -> np.ndarray:
        keep = np.zeros(len(times), dtype=bool)
        i = 0
        while i < len(times):
            if self._off_end is None:
                # currently on until _on_end
                j = int(np.searchsorted(times, self._on_end, side="left"))
                keep[i:j] = True
                if j >= len(times):
                    break
                i = j
                self._off_end = self._on_end + self._draw_off()
            else:
                j = int(np.searchsorted(times, self._off_end, side="left"))
                if j >= len(times):
                    break
                i = j
                self._on_end = self._off_end + self._draw_on()
                self._off_end = None
        return keep

    def peek(self) -> int:
        while self._pos >= len(self._buf):
            self._refill()
        return self._buf[self._pos]

    def take_until(self, t: int) -> list[int]:
        """All not-yet-consumed arrival times ``<= t``, in order."""
        out: list[int] = []
        while True:
            if self._pos >= len(self._buf):
                self._refill()
            buf = self._buf
            j = bisect_right(buf, t, self._pos)
            if j > self._pos:
                out.extend(buf[self._pos:j])
                self._pos = j
            if j < len(buf):
                return out


def generate(flow: FlowSpec, rng: RngStream, until: int, gate_rng: Optional[RngStream] = None):
    """Arrival times in ``(0, until]``."""
    return ArrivalProcess(flow, rng, gate_rng).take_until(until)


class TxQueue:
    """FIFO of packet enqueue times with a capacity and a lifetime limit."""

    def __init__(self, capacity: int = 100, delay_limit: Optional[int] = ms(500)):
        if capacity < 1:
            raise ValueError("queue capacity must be >= 1")
        self.capacity = capacity
        self.delay_limit = delay_limit
        self.entries: deque[int] = deque()
        self.timeout_drops = 0
        self.overflow_drops = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def enqueue(self, pkt_time: int, at: Optional[int] = None) -> str:
        if len(self.entries) >= self.capacity:
            self.overflow_drops += 1
            return "dropped-full"
        self.entries.append(pkt_time if at is None else at)
        return "accepted"

    def enqueue_batch(self, times) -> int:
        """Enqueue arrivals in time order; returns how many overflowed."""
        room = self.capacity - len(self.entries)
        k = len(times)
        if k <= room:
            self.entries.extend(times)
            return 0
        if room > 0:
            self.entries.extend(times[:room])
        dropped = k - max(room, 0)
        self.overflow_drops += dropped
        return dropped

    def dequeue_head(self, at: int) -> Optional[int]:
        limit = self.delay_limit
        entries = self.entries
        if limit is not None:
            while entries and at - entries[0] > limit:
                entries.popleft()
                self.timeout_drops += 1
        return entries.popleft() if entries else None
