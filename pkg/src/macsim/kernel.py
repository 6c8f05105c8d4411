"""Discrete-event kernel: integer-ns clock, ordered event queue, seeded RNG streams."""

from __future__ import annotations

import heapq
import itertools
from enum import IntEnum
from typing import Any, Optional

import numpy as np

NS = 1
US = 1_000
MS = 1_000_000
S = 1_000_000_000


def us(value: float) -> int:
    """Microseconds to integer nanoseconds (must land on a whole ns)."""
    ns = value * US
    if ns != int(ns):
        raise ValueError(f"{value} us is not a whole number of ns")
    return int(ns)


def ms(value: float) -> int:
    ns = value * MS
    if ns != int(ns):
        raise ValueError(f"{value} ms is not a whole number of ns")
    return int(ns)


class SchedulingError(RuntimeError):
    """An event was scheduled before the current clock."""


class EventKind(IntEnum):
    BACKOFF_SLOT = 0
    TX_END = 1
    ACK_DUE = 2
    ACK_TIMEOUT = 3
    PACKET_ARRIVAL = 4
    TF_BOUNDARY = 5
    METRICS_SAMPLE = 6


class Event:
    __slots__ = ("fire_at", "seq", "kind", "payload", "cancelled")

    def __init__(self, fire_at: int, seq: int, kind: EventKind, payload: Any = None):
        self.fire_at = fire_at
        self.seq = seq
        self.kind = kind
        self.payload = payload
        self.cancelled = False

    def __repr__(self) -> str:
        return f"Event({self.fire_at}, {self.seq}, {self.kind.name})"


class EventQueue:
    """Min-heap of events keyed on ``(fire_at, seq)``.

    Cancellation is lazy: a cancelled event stays in the heap and is skipped
    when it reaches the top.
    """

    def __init__(self, horizon: Optional[int] = None):
        self.now = 0
        self.horizon = horizon
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = itertools.count()

    def __len__(self) -> int:
        return sum(1 for _, _, ev in self._heap if not ev.cancelled)

    def schedule(self, fire_at: int, kind: EventKind, payload: Any = None) -> Event:
        if fire_at < self.now:
            raise SchedulingError(
                f"cannot schedule {kind.name} at t={fire_at} ns, clock is at {self.now} ns"
            )
        seq = next(self._seq)
        ev = Event(int(fire_at), seq, kind, payload)
        heapq.heappush(self._heap, (ev.fire_at, seq, ev))
        return ev

    @staticmethod
    def cancel(ev: Optional[Event]) -> None:
        if ev is not None:
            ev.cancelled = True

    def pop_next(self) -> Optional[Event]:
        """Next live event, advancing the clock; ``None`` marks end of simulation."""
        heap = self._heap
        while heap:
            fire_at, _, ev = heap[0]
            if ev.cancelled:
                heapq.heappop(heap)
                continue
            if self.horizon is not None and fire_at > self.horizon:
                return None
            heapq.heappop(heap)
            self.now = fire_at
            return ev
        return None


class RngStream:
    """Independent PCG64 stream identified by ``(seed, stream_id)``.

    Streams for different ids never share state, so adding a station does
    not shift the draws of any other station.
    """

    BUFFER = 1024

    def __init__(self, seed: int, stream_id: int):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(ss))
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        """One uniform draw in ``[0, 1)`` from a buffered block."""
        if self._pos >= len(self._buf):
            self._buf = self.gen.random(self.BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniform(self, low: float, high: float, size=None):
        return self.gen.uniform(low, high, size)

    def exponential(self, mean: float, size=None):
        return self.gen.exponential(mean, size)


def uniform_slot(rng: RngStream, w: int) -> int:
    """Uniform integer in ``[0, w-1]``; one draw per call."""
    if w < 1:
        raise ValueError(f"contention window must hold at least one slot, got w={w}")
    return int(rng.random() * w)


def backoff_stream(station: int) -> int:
    return 2 * station


def traffic_stream(station: int) -> int:
    return 2 * station + 1
