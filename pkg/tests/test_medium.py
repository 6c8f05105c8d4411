import pytest
from hypothesis import given, strategies as st

from macsim.medium import Channel, Outcome, PhyProfile, TxRecord

from oracles import overlapping

PHY = PhyProfile()


def run_intervals(intervals):
    """Replay (start, end) pairs through a Channel and return outcomes in input order."""
    phy = PhyProfile(header_overhead=0, data_rate=1_000_000_000)  # 1 bit = 1 ns
    ch = Channel(phy, keep_log=True)
    order = sorted(range(len(intervals)), key=lambda i: intervals[i][0])
    recs = {}
    pending = []
    for i in order:
        s, e = intervals[i]
        # settle every frame that ended before this start
        for j in sorted([j for j in pending if recs[j].end <= s], key=lambda j: recs[j].end):
            ch.resolve_outcomes(recs[j])
            pending.remove(j)
        recs[i] = ch.begin_tx(i, e - s, s)
        pending.append(i)
    for j in sorted(pending, key=lambda j: recs[j].end):
        ch.resolve_outcomes(recs[j])
    return [recs[i].outcome for i in range(len(intervals))]


def test_frame_duration_rounds_up():
    assert PhyProfile(header_overhead=0).frame_duration(8000) == 123077
    assert PHY.frame_duration(8000) == -(-9600 * 10**9 // 65_000_000)


def test_profile_validation():
    with pytest.raises(ValueError):
        PhyProfile(slot_time=0)
    with pytest.raises(ValueError):
        PhyProfile(data_rate=0)
    with pytest.raises(ValueError):
        TxRecord(0, 10, 10, 0)


def test_sense_half_open():
    ch = Channel(PHY)
    assert ch.sense(0) == "idle"
    rec = ch.begin_tx(0, 8000, 1000)
    assert ch.sense(1000) == "busy"
    assert ch.sense(rec.end - 1) == "busy"
    assert ch.sense(rec.end) == "idle"
    assert ch.sense(999) == "idle"


def test_simultaneous_starts_collide():
    ch = Channel(PHY)
    a = ch.begin_tx(0, 8000, 0)
    b = ch.begin_tx(1, 8000, 0)
    assert ch.resolve_outcomes(a) is Outcome.COLLIDED
    assert ch.resolve_outcomes(b) is Outcome.COLLIDED


def test_lone_frame_delivered():
    ch = Channel(PHY)
    a = ch.begin_tx(0, 8000, 0)
    assert ch.resolve_outcomes(a) is Outcome.DELIVERED
    assert ch.ack_start(a) == a.end + PHY.sifs
    assert not ch.busy


@pytest.mark.parametrize("intervals,expected", [
    ([(0, 100), (50, 150)], ["collided", "collided"]),
    ([(0, 100), (200, 300)], ["delivered", "delivered"]),
    ([(0, 100), (100, 200)], ["delivered", "delivered"]),
    ([(0, 100), (50, 150), (140, 160)], ["collided", "collided", "collided"]),
])
def test_interval_examples(intervals, expected):
    assert [o.value for o in run_intervals(intervals)] == expected


@given(st.lists(st.tuples(st.integers(0, 500), st.integers(1, 120)), min_size=1, max_size=12))
def test_online_resolution_matches_interval_oracle(raw):
    intervals = [(s, s + d) for s, d in raw]
    outcomes = run_intervals(intervals)
    for i, out in enumerate(outcomes):
        expect = Outcome.COLLIDED if overlapping(intervals, i) else Outcome.DELIVERED
        assert out is expect


def test_outcome_assigned_once():
    ch = Channel(PHY)
    a = ch.begin_tx(0, 8000, 0)
    first = ch.resolve_outcomes(a)
    assert ch.resolve_outcomes(a) is first


def test_trace_file(tmp_path):
    ch = Channel(PHY, keep_log=True)
    a = ch.begin_tx(3, 8000, 0)
    ch.resolve_outcomes(a)
    ack = ch.begin_tx(3, 0, a.end + PHY.sifs, is_ack=True)
    assert ack.end - ack.start == PHY.ack_duration
    ch.begin_tx(1, 8000, ack.end + 10)
    path = tmp_path / "t.csv"
    ch.write_trace(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "station,start_ns,end_ns,bits,outcome"
    assert lines[1].endswith(",8000,delivered")
    assert lines[2].endswith(",ack")
    assert lines[3].endswith(",in-flight")
