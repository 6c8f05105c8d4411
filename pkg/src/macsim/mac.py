"""Per-station MAC state and the contention strategies.

Strategies are flags layered on the legacy EDCA/BEB behaviour:

* ``eicw``  halves the slot time and doubles every slot count.
* ``eca``   reuses the winning slot position after a success (deterministic backoff).
* ``tdu``   gives the owner of the current time frame the shortest AIFS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

from .kernel import RngStream, ms, uniform_slot, us

STRATEGIES = ("legacy", "eicw", "eca", "tdu")
ECA_MODES = ("same-slot", "fixed-half")


class AccessCategory(str, Enum):
    VOICE = "voice"
    VIDEO = "video"
    BEST_EFFORT = "best_effort"
    BACKGROUND = "background"


@dataclass(frozen=True)
class EdcaParams:
    ac: AccessCategory = AccessCategory.BEST_EFFORT
    aifs_slots: int = 3
    cw_min: int = 16
    cw_max: int = 1024
    slot_time: int = us(9)
    eicw: bool = False

    def __post_init__(self):
        if not 1 <= self.cw_min <= self.cw_max:
            raise ValueError(f"need 1 <= cw_min <= cw_max, got {self.cw_min}, {self.cw_max}")
        ratio = self.cw_max // self.cw_min
        if self.cw_max % self.cw_min or ratio & (ratio - 1):
            raise ValueError("cw_max must be cw_min times a power of two")
        if self.aifs_slots < 1 or self.slot_time <= 0:
            raise ValueError("aifs_slots and slot_time must be positive")

    def aifs(self, sifs: int) -> int:
        return sifs + self.aifs_slots * self.slot_time

    def doubling_chain(self) -> list[int]:
        chain = [self.cw_min]
        while chain[-1] < self.cw_max:
            chain.append(min(2 * chain[-1], self.cw_max))
        return chain


EDCA_DEFAULTS = {
    AccessCategory.VOICE: EdcaParams(AccessCategory.VOICE, aifs_slots=2, cw_min=4, cw_max=8),
    AccessCategory.VIDEO: EdcaParams(AccessCategory.VIDEO, aifs_slots=2, cw_min=8, cw_max=16),
    AccessCategory.BEST_EFFORT: EdcaParams(AccessCategory.BEST_EFFORT, aifs_slots=3, cw_min=16,
                                           cw_max=1024),
    AccessCategory.BACKGROUND: EdcaParams(AccessCategory.BACKGROUND, aifs_slots=7, cw_min=16,
                                          cw_max=1024),
}


def apply_eicw(params: EdcaParams) -> EdcaParams:
    """Half-length slots, twice as many of them: same wall-clock AIFS and CW."""
    if params.eicw:
        raise ValueError("EICW already applied to these parameters")
    if params.slot_time % 2:
        raise ValueError(f"slot time {params.slot_time} ns cannot be halved exactly")
    return replace(
        params,
        slot_time=params.slot_time // 2,
        aifs_slots=2 * params.aifs_slots,
        cw_min=2 * params.cw_min,
        cw_max=2 * params.cw_max,
        eicw=True,
    )


@dataclass
class TduSchedule:
    tc_duration: int = ms(100)
    tf_duration: int = ms(10)
    owner_of: dict[int, int] = field(default_factory=dict)
    owner_aifs_slots: int = 1

    def __post_init__(self):
        if self.tf_duration <= 0 or self.tc_duration % self.tf_duration:
            raise ValueError("time cycle must be a whole number of time frames")
        bad = [k for k in self.owner_of if not 0 <= k < self.frames_per_cycle]
        if bad:
            raise ValueError(f"time frame index out of range: {bad}")

    @property
    def frames_per_cycle(self) -> int:
        return self.tc_duration // self.tf_duration

    @classmethod
    def round_robin(cls, n_stations: int, **kw) -> "TduSchedule":
        sched = cls(**kw)
        sched.owner_of = {k: k % n_stations for k in range(sched.frames_per_cycle)}
        return sched

    @classmethod
    def from_owner_list(cls, owners: Iterable[Optional[int]], **kw) -> "TduSchedule":
        sched = cls(**kw)
        sched.owner_of = {k: o for k, o in enumerate(owners) if o is not None}
        sched.__post_init__()
        return sched


def tdu_owner(at: int, sched: TduSchedule) -> Optional[int]:
    index = (at % sched.tc_duration) // sched.tf_duration
    return sched.owner_of.get(index)


@dataclass
class StationState:
    station_id: int
    params: EdcaParams
    strategies: frozenset = frozenset()
    eca_mode: str = "same-slot"
    retry_limit: int = 7
    cw_current: int = 0
    backoff_remaining: int = 0
    eca_slot: Optional[int] = None
    retry_count: int = 0
    last_draw: int = 0
    queue: object = None

    def __post_init__(self):
        if not self.cw_current:
            self.cw_current = self.params.cw_min
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise ValueError(f"unknown strategies: {sorted(unknown)}")
        if self.eca_mode not in ECA_MODES:
            raise ValueError(f"eca_mode must be one of {ECA_MODES}, got {self.eca_mode!r}")

    @property
    def eca(self) -> bool:
        return "eca" in self.strategies

    @property
    def tdu(self) -> bool:
        return "tdu" in self.strategies

    @property
    def reserved(self) -> bool:
        return self.eca and self.eca_slot is not None

    def deterministic_backoff(self) -> int:
        # same-slot: a full round of cw_current idle slots lands the station on
        # the slot index it won in
        if self.eca_mode == "same-slot":
            return self.cw_current
        return max(math.ceil(self.cw_current / 2) - 1, 1)


def draw_backoff(st: StationState, rng: RngStream) -> int:
    if st.reserved:
        value = st.deterministic_backoff()
    else:
        value = uniform_slot(rng, st.cw_current)
        st.last_draw = value
    st.backoff_remaining = value
    return value


def on_tx_success(st: StationState) -> StationState:
    st.retry_count = 0
    if st.eca:
        # the reservation keeps the window it was won in
        if st.eca_slot is None:
            st.eca_slot = st.last_draw
        return st
    st.cw_current = st.params.cw_min
    return st


def on_tx_failure(st: StationState) -> bool:
    """Apply a missed ACK; returns True when the frame has to be dropped."""
    st.cw_current = min(2 * st.cw_current, st.params.cw_max)
    st.retry_count += 1
    st.eca_slot = None
    if st.retry_count >= st.retry_limit:
        st.retry_count = 0
        st.cw_current = st.params.cw_min
        return True
    return False


def effective_aifs(st: StationState, at: int, sched: Optional[TduSchedule]) -> int:
    if st.tdu and sched is not None and tdu_owner(at, sched) == st.station_id:
        return sched.owner_aifs_slots
    return st.params.aifs_slots


def parse_combo(text: str) -> frozenset:
    """``"eicw+tdu"`` -> ``{"eicw", "tdu"}``; ``"legacy"`` -> empty set."""
    flags = {part.strip() for part in text.split("+") if part.strip()}
    unknown = flags - set(STRATEGIES)
    if unknown:
        raise ValueError(f"unknown protocol(s) {sorted(unknown)} in {text!r}")
    flags.discard("legacy")
    return frozenset(flags)


def combo_name(flags: Iterable[str]) -> str:
    flags = set(flags) - {"legacy"}
    if not flags:
        return "legacy"
    return "+".join(s for s in STRATEGIES if s in flags)


def compose_strategies(flags: Iterable[str], station_id: int = 0,
                       base: Optional[EdcaParams] = None, **kw) -> StationState:
    flags = frozenset(flags) - {"legacy"}
    params = base or EDCA_DEFAULTS[AccessCategory.BEST_EFFORT]
    if "eicw" in flags:
        params = apply_eicw(params)
    return StationState(station_id, params, strategies=flags, **kw)
