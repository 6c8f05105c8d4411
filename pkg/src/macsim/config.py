"""Scenario configuration: INI file + CLI overrides -> runnable ``SimConfig`` cells.

Every key has a default, so an empty file (or no file) is a valid scenario.
Keys are addressed as ``section.key`` in diagnostics, e.g. ``queue.capacity``.

    [simulation]
    stations = 5, 10, 15, 20, 25, 30
    protocol = legacy, eicw, eca, tdu
    seeds = 1-10
    duration_s = 30
    warmup_s = 1

    [traffic]
    kind = saturated-cbr
    offered_mbps = 8

    [tdu]
    owners = 0, 1, 2, -, 4
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from typing import Optional

from .kernel import S, ms, us
from .mac import (
    ECA_MODES, EDCA_DEFAULTS, AccessCategory, EdcaParams, TduSchedule, combo_name, parse_combo,
)
from .medium import PhyProfile
from .sim import SimConfig
from .traffic import TRAFFIC_KINDS, FlowSpec

DEFAULTS: dict[str, dict[str, str]] = {
    "simulation": {
        "stations": "5, 10, 15, 20, 25, 30",
        "protocol": "legacy, eicw, eca, tdu, eicw+eca, eicw+tdu, eca+tdu, eicw+eca+tdu",
        "seeds": "1-10",
        "duration_s": "30",
        "warmup_s": "1",
        "eca_mode": "same-slot",
        "legacy_stations": "0",
        "retry_limit": "7",
    },
    "phy": {
        "slot_us": "9",
        "sifs_us": "16",
        "data_rate_mbps": "65",
        "ack_us": "44",
        "header_bits": "1600",
        "cca_miss": "0",
    },
    "edca": {
        "ac": "best_effort",
        "aifs_slots": "",
        "cw_min": "",
        "cw_max": "",
    },
    "traffic": {
        "kind": "saturated-cbr",
        "packet_bytes": "1000",
        "offered_mbps": "8",
        "jitter": "0.1",
        "on_mean_s": "1",
        "off_mean_s": "0",
    },
    "queue": {
        "delay_limit_ms": "500",
        "capacity": "100",
    },
    "tdu": {
        "tc_ms": "100",
        "tf_ms": "10",
        "owner_aifs_slots": "1",
        "owners": "",
    },
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def parse_int_list(text: str) -> list[int]:
    """``"1-3, 7"`` -> ``[1, 2, 3, 7]``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, "")
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo_i, hi_i + 1))
        else:
            out.append(int(part))
    return out


@dataclass
class Scenario:
    stations: list[int]
    combos: list[frozenset]
    seeds: list[int]
    duration_s: float = 30.0
    warmup_s: float = 1.0
    phy: PhyProfile = field(default_factory=PhyProfile)
    flow: FlowSpec = field(default_factory=FlowSpec)
    edca: EdcaParams = EDCA_DEFAULTS[AccessCategory.BEST_EFFORT]
    tdu_owners: Optional[list[Optional[int]]] = None
    tdu_kw: dict = field(default_factory=dict)
    queue_capacity: int = 100
    delay_limit: Optional[int] = ms(500)
    retry_limit: int = 7
    eca_mode: str = "same-slot"
    legacy_stations: int = 0
    cca_miss: float = 0.0
    raw: Optional[configparser.ConfigParser] = None

    def cells(self) -> list[tuple[int, int, int]]:
        """``(combo index, n, seed)`` in output order."""
        return [(c, n, s) for c in range(len(self.combos)) for n in self.stations
                for s in self.seeds]

    def sim_config(self, combo: frozenset, n: int, seed: int, trace: bool = False) -> SimConfig:
        tdu = None
        if "tdu" in combo:
            if self.tdu_owners is not None:
                tdu = TduSchedule.from_owner_list(self.tdu_owners, **self.tdu_kw)
            else:
                tdu = TduSchedule.round_robin(n, **self.tdu_kw)
        return SimConfig(
            n_stations=n, flags=combo, seed=seed,
            duration=round(self.duration_s * S), warmup=round(self.warmup_s * S),
            phy=self.phy, flow=self.flow, edca=self.edca, tdu=tdu,
            queue_capacity=self.queue_capacity, delay_limit=self.delay_limit,
            retry_limit=self.retry_limit, eca_mode=self.eca_mode,
            legacy_stations=min(self.legacy_stations, n), cca_miss=self.cca_miss, trace=trace,
        )

    def to_ini(self) -> str:
        buf = io.StringIO()
        self.raw.write(buf)
        return buf.getvalue()


def load(path: Optional[str] = None, overrides: Optional[dict[str, str]] = None) -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from exc
        except configparser.Error as exc:
            raise ConfigError("--config", f"malformed file: {exc}") from exc
    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        cp.set(section, key, value)
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    return _build(cp)


def _get(cp, dotted: str, conv):
    section, key = dotted.split(".", 1)
    text = cp.get(section, key).strip()
    try:
        return conv(text)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(dotted, f"invalid value {text!r} ({exc})") from exc


def _positive(conv):
    def check(text):
        v = conv(text)
        if v <= 0:
            raise ValueError("must be positive")
        return v
    return check


def _combos(text: str) -> list[frozenset]:
    combos = [parse_combo(part) for part in text.split(",") if part.strip()]
    if not combos:
        raise ValueError("empty list")
    seen, out = set(), []
    for c in combos:
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def _nonempty(conv):
    def check(text):
        v = conv(text)
        if not v:
            raise ValueError("empty list")
        return v
    return check


def _owners(text: str) -> Optional[list[Optional[int]]]:
    if not text:
        return None
    return [None if p.strip() in ("-", "") else int(p) for p in text.split(",")]


def _build(cp: configparser.ConfigParser) -> Scenario:
    stations = _get(cp, "simulation.stations", _nonempty(parse_int_list))
    if any(n < 1 for n in stations):
        raise ConfigError("simulation.stations", "station counts must be >= 1")
    combos = _get(cp, "simulation.protocol", _combos)
    seeds = _get(cp, "simulation.seeds", _nonempty(parse_int_list))
    duration_s = _get(cp, "simulation.duration_s", _positive(float))
    warmup_s = _get(cp, "simulation.warmup_s", float)
    if not 0 <= warmup_s < duration_s:
        raise ConfigError("simulation.warmup_s", "must be in [0, duration_s)")
    eca_mode = _get(cp, "simulation.eca_mode", str)
    if eca_mode not in ECA_MODES:
        raise ConfigError("simulation.eca_mode", f"must be one of {ECA_MODES}")
    legacy_stations = _get(cp, "simulation.legacy_stations", int)
    if legacy_stations < 0:
        raise ConfigError("simulation.legacy_stations", "must be >= 0")
    retry_limit = _get(cp, "simulation.retry_limit", _positive(int))

    try:
        phy = PhyProfile(
            slot_time=_get(cp, "phy.slot_us", lambda t: us(float(t))),
            sifs=_get(cp, "phy.sifs_us", lambda t: us(float(t))),
            data_rate=_get(cp, "phy.data_rate_mbps", lambda t: round(float(t) * 1e6)),
            ack_duration=_get(cp, "phy.ack_us", lambda t: us(float(t))),
            header_overhead=_get(cp, "phy.header_bits", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("phy", str(exc)) from exc
    cca_miss = _get(cp, "phy.cca_miss", float)
    if not 0 <= cca_miss < 1:
        raise ConfigError("phy.cca_miss", "must be in [0, 1)")

    ac = _get(cp, "edca.ac", AccessCategory)
    edca = replace(EDCA_DEFAULTS[ac], slot_time=phy.slot_time)
    over = {}
    for key in ("aifs_slots", "cw_min", "cw_max"):
        if cp.get("edca", key).strip():
            over[key] = _get(cp, f"edca.{key}", int)
    try:
        edca = replace(edca, **over)
    except ValueError as exc:
        raise ConfigError("edca", str(exc)) from exc

    kind = _get(cp, "traffic.kind", str)
    if kind not in TRAFFIC_KINDS:
        raise ConfigError("traffic.kind", f"must be one of {TRAFFIC_KINDS}")
    try:
        flow = FlowSpec(
            kind=kind,
            packet_bytes=_get(cp, "traffic.packet_bytes", int),
            offered_rate=_get(cp, "traffic.offered_mbps", _positive(float)) * 1e6,
            jitter=_get(cp, "traffic.jitter", float),
            on_mean_s=_get(cp, "traffic.on_mean_s", _positive(float)),
            off_mean_s=_get(cp, "traffic.off_mean_s", float),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("traffic", str(exc)) from exc
    if flow.off_mean_s < 0:
        raise ConfigError("traffic.off_mean_s", "must be >= 0")

    limit_text = cp.get("queue", "delay_limit_ms").strip().lower()
    if limit_text in ("inf", "none", ""):
        delay_limit = None
    else:
        delay_limit = _get(cp, "queue.delay_limit_ms", lambda t: ms(float(t)))
        if delay_limit <= 0:
            raise ConfigError("queue.delay_limit_ms", "must be positive (or inf)")
    capacity = _get(cp, "queue.capacity", _positive(int))

    tdu_kw = {
        "tc_duration": _get(cp, "tdu.tc_ms", lambda t: ms(float(t))),
        "tf_duration": _get(cp, "tdu.tf_ms", _positive(lambda t: ms(float(t)))),
        "owner_aifs_slots": _get(cp, "tdu.owner_aifs_slots", _positive(int)),
    }
    if tdu_kw["tc_duration"] % tdu_kw["tf_duration"]:
        raise ConfigError("tdu.tc_ms", "must be a whole multiple of tdu.tf_ms")
    owners = _get(cp, "tdu.owners", _owners)
    if owners is not None:
        frames = tdu_kw["tc_duration"] // tdu_kw["tf_duration"]
        if len(owners) > frames:
            raise ConfigError("tdu.owners", f"{len(owners)} owners for {frames} time frames")
        too_big = [o for o in owners if o is not None and not 0 <= o < min(stations)]
        if too_big:
            raise ConfigError("tdu.owners", f"stations {too_big} do not exist in every scenario")

    cp.set("simulation", "protocol", ", ".join(combo_name(c) for c in combos))
    return Scenario(
        stations=stations, combos=combos, seeds=seeds, duration_s=duration_s,
        warmup_s=warmup_s, phy=phy, flow=flow, edca=edca, tdu_owners=owners, tdu_kw=tdu_kw,
        queue_capacity=capacity, delay_limit=delay_limit, retry_limit=retry_limit,
        eca_mode=eca_mode, legacy_stations=legacy_stations, cca_miss=cca_miss, raw=cp,
    )
