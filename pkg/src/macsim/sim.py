"""One simulation run: stations contending on a shared channel.

Backoff countdowns are advanced lazily. While the medium is idle each
contending station has a known expiry instant
``countdown_origin + remaining * slot``; only the earliest expiry becomes a
kernel event. When the medium turns busy the elapsed idle slots are
subtracted from every other counter, which is exactly the slot-by-slot
freeze/resume rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .kernel import (
    S, EventKind, EventQueue, RngStream, backoff_stream, traffic_stream,
)
from .mac import (
    EDCA_DEFAULTS, AccessCategory, EdcaParams, StationState, TduSchedule, compose_strategies,
    draw_backoff, effective_aifs, on_tx_failure, on_tx_success, tdu_owner,
)
from .medium import Channel, Outcome, PhyProfile, TxRecord
from .metrics import RunMetrics
from .traffic import ArrivalProcess, FlowSpec, TxQueue

GATE_STREAM_BASE = 1 << 20


class Phase(Enum):
    IDLE = "idle"
    CONTENDING = "contending"
    TX = "tx"
    WAIT_ACK = "wait-ack"


@dataclass
class SimConfig:
    n_stations: int
    flags: frozenset = frozenset()
    seed: int = 1
    duration: int = 30 * S
    warmup: int = 1 * S
    phy: PhyProfile = field(default_factory=PhyProfile)
    flow: FlowSpec = field(default_factory=FlowSpec)
    edca: EdcaParams = EDCA_DEFAULTS[AccessCategory.BEST_EFFORT]
    tdu: Optional[TduSchedule] = None
    queue_capacity: int = 100
    delay_limit: Optional[int] = 500 * 1_000_000
    retry_limit: int = 7
    eca_mode: str = "same-slot"
    legacy_stations: int = 0
    cca_miss: float = 0.0
    trace: bool = False
    late_mark: Optional[int] = None

    def __post_init__(self):
        if self.n_stations < 1:
            raise ValueError("need at least one station")
        if self.duration <= self.warmup:
            raise ValueError("duration must exceed warmup")
        if not 0 <= self.legacy_stations <= self.n_stations:
            raise ValueError("legacy_stations out of range")
        if not 0.0 <= self.cca_miss < 1.0:
            raise ValueError("cca_miss must be in [0, 1)")
        if self.tdu is not None:
            missing = [s for s in self.tdu.owner_of.values() if not 0 <= s < self.n_stations]
            if missing:
                raise ValueError(f"TDu owners {missing} are not stations")


class Station:
    __slots__ = ("mac", "rng", "arrivals", "queue", "phase", "armed", "origin", "expiry",
                 "held", "ready_at", "timeout_ev", "wake_ev", "slot", "aifs_ns", "owner_aifs_ns",
                 "id")

    def __init__(self, mac: StationState, rng: RngStream, arrivals: ArrivalProcess,
                 queue: TxQueue):
        self.mac = mac
        self.rng = rng
        self.arrivals = arrivals
        self.queue = queue
        self.phase = Phase.IDLE
        self.armed = False
        self.origin = 0
        self.expiry = 0
        self.held: Optional[int] = None
        self.ready_at = 0
        self.timeout_ev = None
        self.wake_ev = None
        self.slot = mac.params.slot_time
        self.id = mac.station_id
        self.aifs_ns = 0
        self.owner_aifs_ns = None


@dataclass
class RunResult:
    metrics: RunMetrics
    converged_at: Optional[int] = None
    collisions_after_convergence: int = 0
    collisions_after_mark: int = 0
    channel: Optional[Channel] = None
    stations: list = field(default_factory=list)


class Simulation:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.phy = cfg.phy
        self.events = EventQueue(horizon=cfg.duration)
        self.channel = Channel(cfg.phy, keep_log=cfg.trace)
        self.metrics = RunMetrics(sim_duration=cfg.duration, warmup=cfg.warmup)
        self.counting = False
        self.ack_pending = False
        self.access_ev = None
        self.idle_since = 0
        self.in_air: set = set()
        self.converged_at: Optional[int] = None
        self.collisions_after_convergence = 0
        self.collisions_after_mark = 0
        self.tdu = None
        if "tdu" in cfg.flags:
            self.tdu = cfg.tdu or TduSchedule.round_robin(cfg.n_stations)
        self.stations = [self._make_station(i) for i in range(cfg.n_stations)]
        self.eca_stations = [st for st in self.stations if st.mac.eca]
        self.payload_bits = cfg.flow.packet_bits

    def _make_station(self, i: int) -> Station:
        cfg = self.cfg
        flags = frozenset() if i < cfg.legacy_stations else cfg.flags
        mac = compose_strategies(flags, i, base=cfg.edca, eca_mode=cfg.eca_mode,
                                 retry_limit=cfg.retry_limit)
        gate = None
        if cfg.flow.kind == "web-like-onoff":
            gate = RngStream(cfg.seed, GATE_STREAM_BASE + i)
        arrivals = ArrivalProcess(cfg.flow, RngStream(cfg.seed, traffic_stream(i)), gate)
        queue = TxQueue(cfg.queue_capacity, cfg.delay_limit)
        mac.queue = queue
        st = Station(mac, RngStream(cfg.seed, backoff_stream(i)), arrivals, queue)
        st.aifs_ns = mac.params.aifs(cfg.phy.sifs)
        if mac.tdu and self.tdu is not None:
            st.owner_aifs_ns = cfg.phy.sifs + self.tdu.owner_aifs_slots * st.slot
        return st

    # -- queue plumbing -------------------------------------------------

    def _fill(self, st: Station, t: int) -> None:
        times = st.arrivals.take_until(t)
        if len(times):
            over = st.queue.enqueue_batch(times)
            if self.counting:
                self.metrics.generated += len(times)
                self.metrics.overflow_drops += over

    def _take_packet(self, st: Station, t: int) -> Optional[int]:
        self._fill(st, t)
        before = st.queue.timeout_drops
        pkt = st.queue.dequeue_head(t)
        if self.counting:
            self.metrics.timeout_drops += st.queue.timeout_drops - before
        return pkt

    def _has_work(self, st: Station, t: int) -> bool:
        if st.held is not None or st.mac.reserved:
            return True
        self._fill(st, t)
        return len(st.queue) > 0

    def _go_idle(self, st: Station) -> None:
        st.phase = Phase.IDLE
        st.armed = False
        st.wake_ev = self.events.schedule(max(st.arrivals.peek(), self.events.now),
                                          EventKind.PACKET_ARRIVAL, st)

    # -- contention ------------------------------------------------------

    def _medium_free(self) -> bool:
        return not self.channel.active and not self.ack_pending

    def _arm(self, st: Station, t: int) -> None:
        """Start counting for a station that became ready while the medium is idle.

        Countdown boundaries stay on the slot grid every station derived from
        the instant the medium went idle, so late joiners can still collide
        with stations counting on that grid.
        """
        anchor = self.idle_since + self.phy.sifs
        aifs = effective_aifs(st.mac, self.idle_since, self.tdu)
        k = max(aifs, -(-(t - anchor) // st.slot))
        st.origin = anchor + k * st.slot
        st.expiry = st.origin + st.mac.backoff_remaining * st.slot
        st.armed = True

    def _arm_all(self, t: int) -> None:
        self.idle_since = t
        owner = tdu_owner(t, self.tdu) if self.tdu is not None else None
        contending = Phase.CONTENDING
        nxt = None
        for st in self.stations:
            if st.armed:
                e = st.expiry
            elif st.phase is contending:
                if st.owner_aifs_ns is not None and st.id == owner:
                    st.origin = t + st.owner_aifs_ns
                else:
                    st.origin = t + st.aifs_ns
                e = st.expiry = st.origin + st.mac.backoff_remaining * st.slot
                st.armed = True
            else:
                continue
            if nxt is None or e < nxt:
                nxt = e
        self._set_access(nxt)

    def _reschedule_access(self) -> None:
        nxt = None
        for st in self.stations:
            if st.armed and (nxt is None or st.expiry < nxt):
                nxt = st.expiry
        self._set_access(nxt)

    def _set_access(self, nxt: Optional[int]) -> None:
        ev = self.access_ev
        if ev is not None and not ev.cancelled and nxt is not None and ev.fire_at == nxt:
            return
        EventQueue.cancel(ev)
        self.access_ev = None
        if nxt is not None:
            self.access_ev = self.events.schedule(nxt, EventKind.BACKOFF_SLOT)

    def _freeze(self, st: Station, t: int) -> None:
        if t > st.origin:
            st.mac.backoff_remaining -= (t - st.origin) // st.slot
        st.armed = False

    def _on_access(self, t: int) -> None:
        self.access_ev = None
        starters = []
        for st in self.stations:
            if not (st.armed and st.expiry == t):
                continue
            st.armed = False
            st.mac.backoff_remaining = 0
            pkt = st.held if st.held is not None else self._take_packet(st, t)
            if pkt is None:
                if st.mac.reserved:
                    # keep the reserved slot position without transmitting
                    st.mac.backoff_remaining = max(st.mac.deterministic_backoff(), 1)
                    st.origin = t
                    st.expiry = t + st.mac.backoff_remaining * st.slot
                    st.armed = True
                else:
                    self._go_idle(st)
                continue
            st.held = pkt
            starters.append(st)

        if not starters:
            self._reschedule_access()
            return

        was_busy = bool(self.channel.active)
        for st in starters:
            self._start_data(st, t)
        if self.counting and (len(starters) > 1 or was_busy):
            self.metrics.collision_events += 1

        miss = self.cfg.cca_miss
        for st in self.stations:
            if st.armed:
                if miss and st.rng.random() < miss:
                    continue
                if t > st.origin:
                    st.mac.backoff_remaining -= (t - st.origin) // st.slot
                st.armed = False
        if miss:
            self._reschedule_access()
        else:
            self._set_access(None)

    def _start_data(self, st: Station, t: int) -> None:
        rec = self.channel.begin_tx(st.id, self.payload_bits, t, packet=st.held)
        rec.counted = self.counting
        if rec.counted:
            self.metrics.tx_attempts += 1
            self.in_air.add(rec)
        st.phase = Phase.TX
        self.events.schedule(rec.end, EventKind.TX_END, rec)

    # -- event handlers --------------------------------------------------

    def _on_tx_end(self, rec: TxRecord, t: int) -> None:
        outcome = self.channel.resolve_outcomes(rec)
        st = self.stations[rec.station_id]
        if rec.is_ack:
            self.ack_pending = False
            self._on_success(st, t)
            return
        counted = rec.counted
        if counted:
            self.in_air.discard(rec)
        st.phase = Phase.WAIT_ACK
        if outcome is Outcome.DELIVERED:
            if counted:
                self.metrics.received += 1
                self.metrics.delivered_payload_bits += rec.payload_bits
            if self.counting:
                self.metrics.delivered_packets += 1
            st.held = None
            self.ack_pending = True
            self.events.schedule(t + self.phy.sifs, EventKind.ACK_DUE, st)
        else:
            st.timeout_ev = self.events.schedule(t + self.phy.ack_timeout,
                                                 EventKind.ACK_TIMEOUT, st)
            if counted:
                self.metrics.collisions += 1
            if self.converged_at is not None and rec.start >= self.converged_at:
                self.collisions_after_convergence += 1
            mark = self.cfg.late_mark
            if mark is not None and rec.start >= mark:
                self.collisions_after_mark += 1
        if self._medium_free():
            self._arm_all(t)

    def _on_ack_due(self, st: Station, t: int) -> None:
        rec = self.channel.begin_tx(st.id, 0, t, is_ack=True)
        self.events.schedule(rec.end, EventKind.TX_END, rec)

    def _on_success(self, st: Station, t: int) -> None:
        EventQueue.cancel(st.timeout_ev)
        st.timeout_ev = None
        on_tx_success(st.mac)
        draw_backoff(st.mac, st.rng)
        self._resume(st, t)
        if self.eca_stations and self.converged_at is None:
            self._probe_convergence(t)
        if self._medium_free():
            self._arm_all(t)

    def _on_ack_timeout(self, st: Station, t: int) -> None:
        st.timeout_ev = None
        if on_tx_failure(st.mac):
            st.held = None
            if self.counting:
                self.metrics.retry_drops += 1
        draw_backoff(st.mac, st.rng)
        self._resume(st, t)
        if self._medium_free() and st.phase is Phase.CONTENDING:
            self._arm(st, t)
            self._reschedule_access()

    def _resume(self, st: Station, t: int) -> None:
        st.ready_at = t
        if self._has_work(st, t):
            st.phase = Phase.CONTENDING
            st.armed = False
        else:
            self._go_idle(st)

    def _on_wake(self, st: Station, t: int) -> None:
        st.wake_ev = None
        if st.phase is not Phase.IDLE:
            return
        self._fill(st, t)
        if not len(st.queue):
            self._go_idle(st)
            return
        st.phase = Phase.CONTENDING
        st.ready_at = t
        if self._medium_free():
            self._arm(st, t)
            self._reschedule_access()

    def _on_sample(self, t: int) -> None:
        for st in self.stations:
            self._fill(st, t)
        self.counting = True
        self.metrics.backlog_start = sum(len(st.queue) + (st.held is not None)
                                         for st in self.stations)

    def _probe_convergence(self, t: int) -> None:
        """Mark the first instant at which ECA reservations can no longer collide.

        A reserved station fires on an arithmetic progression of the idle-slot
        clock: offset = current counter, step = its period. Periods are powers
        of two, so two progressions are disjoint iff the offsets differ modulo
        the smaller period.
        """
        progs = []
        for st in self.eca_stations:
            if not st.mac.reserved or st.phase is not Phase.CONTENDING:
                return
            progs.append((st.mac.backoff_remaining, st.mac.deterministic_backoff()))
        for i, (off_a, per_a) in enumerate(progs):
            for off_b, per_b in progs[i + 1:]:
                g = min(per_a, per_b)
                if off_a % g == off_b % g:
                    return
        self.converged_at = t

    # -- driver ----------------------------------------------------------

    def start(self) -> None:
        """Schedule the warmup sample and put every station in its first idle wait."""
        self.events.schedule(self.cfg.warmup, EventKind.METRICS_SAMPLE)
        for st in self.stations:
            draw_backoff(st.mac, st.rng)
            self._go_idle(st)
        self._handlers = {
            EventKind.BACKOFF_SLOT: lambda ev: self._on_access(ev.fire_at),
            EventKind.TX_END: lambda ev: self._on_tx_end(ev.payload, ev.fire_at),
            EventKind.ACK_DUE: lambda ev: self._on_ack_due(ev.payload, ev.fire_at),
            EventKind.ACK_TIMEOUT: lambda ev: self._on_ack_timeout(ev.payload, ev.fire_at),
            EventKind.PACKET_ARRIVAL: lambda ev: self._on_wake(ev.payload, ev.fire_at),
            EventKind.METRICS_SAMPLE: lambda ev: self._on_sample(ev.fire_at),
        }

    def step(self):
        """Process one event; returns it, or ``None`` once the horizon is reached."""
        ev = self.events.pop_next()
        if ev is not None:
            self._handlers[ev.kind](ev)
        return ev

    def run(self) -> RunResult:
        self.start()
        pop = self.events.pop_next
        handlers = self._handlers
        while True:
            ev = pop()
            if ev is None:
                break
            handlers[ev.kind](ev)
        return self._finish()

    def _finish(self) -> RunResult:
        end = self.cfg.duration
        self.events.now = max(self.events.now, end)
        for st in self.stations:
            self._fill(st, end)
        m = self.metrics
        m.in_queue_end = sum(len(st.queue) for st in self.stations)
        m.in_flight_end = sum(st.held is not None for st in self.stations)
        m.in_air_end = len(self.in_air)
        return RunResult(
            metrics=m,
            converged_at=self.converged_at,
            collisions_after_convergence=self.collisions_after_convergence,
            collisions_after_mark=self.collisions_after_mark,
            channel=self.channel if self.cfg.trace else None,
            stations=[st.mac for st in self.stations],
        )


def simulate(cfg: SimConfig) -> RunResult:
    return Simulation(cfg).run()
