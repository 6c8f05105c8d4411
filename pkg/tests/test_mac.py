import pytest
from hypothesis import given, strategies as st

from macsim.kernel import RngStream, ms, us
from macsim.mac import (
    EDCA_DEFAULTS, AccessCategory, EdcaParams, StationState, TduSchedule, apply_eicw,
    combo_name, compose_strategies, draw_backoff, effective_aifs, on_tx_failure,
    on_tx_success, parse_combo, tdu_owner,
)

SIFS = us(16)
BE = EDCA_DEFAULTS[AccessCategory.BEST_EFFORT]
VOICE = EDCA_DEFAULTS[AccessCategory.VOICE]


def station(flags=(), **kw):
    return compose_strategies(frozenset(flags), **kw)


class FixedRng:
    """Feeds preset uniforms so a draw lands on a chosen slot."""

    def __init__(self, *slots, w=16):
        self.values = [(s + 0.5) / w for s in slots]

    def random(self):
        return self.values.pop(0)


def test_default_parameter_sets():
    assert (VOICE.cw_min, VOICE.cw_max, VOICE.aifs_slots) == (4, 8, 2)
    video = EDCA_DEFAULTS[AccessCategory.VIDEO]
    assert (video.cw_min, video.cw_max, video.aifs_slots) == (8, 16, 2)
    assert (BE.cw_min, BE.cw_max, BE.aifs_slots) == (16, 1024, 3)
    assert EDCA_DEFAULTS[AccessCategory.BACKGROUND].aifs_slots == 7


def test_params_validation():
    with pytest.raises(ValueError):
        EdcaParams(cw_min=16, cw_max=8)
    with pytest.raises(ValueError):
        EdcaParams(cw_min=16, cw_max=48)


def test_doubling_chain():
    assert BE.doubling_chain() == [16, 32, 64, 128, 256, 512, 1024]
    assert VOICE.doubling_chain() == [4, 8]


@pytest.mark.parametrize("ac", list(AccessCategory))
def test_eicw_preserves_wall_clock(ac):
    p = EDCA_DEFAULTS[ac]
    e = apply_eicw(p)
    assert e.slot_time * 2 == p.slot_time
    assert e.aifs(SIFS) == p.aifs(SIFS)
    assert e.cw_min * e.slot_time == p.cw_min * p.slot_time
    assert e.cw_max * e.slot_time == p.cw_max * p.slot_time


def test_eicw_examples():
    e = apply_eicw(BE)
    assert (e.slot_time, e.cw_min) == (4500, 32)
    assert 16 * us(9) == 32 * us(4.5) == 144_000
    v = apply_eicw(VOICE)
    assert (v.cw_min, v.cw_max, v.aifs_slots) == (8, 16, 4)
    with pytest.raises(ValueError):
        apply_eicw(e)
    with pytest.raises(ValueError):
        apply_eicw(EdcaParams(slot_time=9001))


def test_legacy_draw_range():
    st_ = station()
    rng = RngStream(5, 0)
    assert all(0 <= draw_backoff(st_, rng) <= 15 for _ in range(500))


def test_legacy_success_resets_window():
    st_ = station()
    st_.cw_current, st_.retry_count = 64, 4
    on_tx_success(st_)
    assert st_.cw_current == 16 and st_.retry_count == 0


def test_failure_doubles_up_to_cap():
    st_ = station()
    assert not on_tx_failure(st_)
    assert st_.cw_current == 32
    v = station(base=VOICE)
    on_tx_failure(v)
    assert v.cw_current == 8
    on_tx_failure(v)
    assert v.cw_current == 8


def test_retry_limit_drops_frame():
    st_ = station()
    drops = [on_tx_failure(st_) for _ in range(7)]
    assert drops == [False] * 6 + [True]
    assert st_.retry_count == 0 and st_.cw_current == 16


@given(st.lists(st.booleans(), max_size=60))
def test_window_stays_in_bounds(outcomes):
    for flags in ((), ("eca",)):
        st_ = station(flags)
        rng = RngStream(1, 0)
        for ok in outcomes:
            draw_backoff(st_, rng)
            assert 0 <= st_.backoff_remaining < max(st_.cw_current, 1) or st_.reserved
            on_tx_success(st_) if ok else on_tx_failure(st_)
            assert BE.cw_min <= st_.cw_current <= BE.cw_max
            if st_.eca_slot is not None:
                assert st_.eca


def test_eca_first_access_is_random_then_reserved():
    st_ = station({"eca"})
    assert draw_backoff(st_, FixedRng(5)) == 5
    assert not st_.reserved
    on_tx_success(st_)
    assert st_.eca_slot == 5 and st_.cw_current == 16
    # next frame lands on the same slot position of the next cw-slot round
    assert draw_backoff(st_, None) == 16


def test_eca_won_at_slot_3():
    st_ = station({"eca"})
    draw_backoff(st_, FixedRng(3))
    st_.retry_count = 4
    on_tx_success(st_)
    assert (st_.eca_slot, st_.cw_current, st_.retry_count) == (3, 16, 0)


def test_eca_collision_falls_back_to_legacy_draw():
    st_ = station({"eca"})
    draw_backoff(st_, FixedRng(5))
    on_tx_success(st_)
    on_tx_failure(st_)
    assert st_.eca_slot is None and st_.cw_current == 32
    rng = RngStream(9, 0)
    vals = {draw_backoff(st_, rng) for _ in range(400)}
    assert max(vals) <= 31 and max(vals) >= 16


def test_eca_fixed_half_mode():
    st_ = station({"eca"}, eca_mode="fixed-half")
    draw_backoff(st_, FixedRng(2))
    on_tx_success(st_)
    assert draw_backoff(st_, None) == 7
    with pytest.raises(ValueError):
        station({"eca"}, eca_mode="nope")


def test_tdu_owner_lookup():
    sched = TduSchedule.round_robin(5)
    assert tdu_owner(ms(235), sched) == sched.owner_of[3] == 3
    assert tdu_owner(0, sched) == 0
    partial = TduSchedule.from_owner_list([0, None, 2])
    assert tdu_owner(ms(15), partial) is None
    assert tdu_owner(ms(95), partial) is None
    with pytest.raises(ValueError):
        TduSchedule(tc_duration=ms(95), tf_duration=ms(10))
    with pytest.raises(ValueError):
        TduSchedule.from_owner_list([0] * 11)


def test_effective_aifs():
    sched = TduSchedule.round_robin(4)
    owner = station({"tdu"}, station_id=1)
    assert effective_aifs(owner, ms(11), sched) == 1
    assert effective_aifs(owner, ms(21), sched) == BE.aifs_slots
    voice = station({"tdu"}, station_id=2, base=VOICE)
    assert effective_aifs(voice, ms(11), sched) == 2
    plain = station((), station_id=1)
    assert effective_aifs(plain, ms(11), sched) == BE.aifs_slots


def test_compose_strategies():
    assert station().strategies == frozenset()
    both = station({"eicw", "tdu"})
    assert both.params.slot_time == 4500 and both.tdu and not both.eca
    allthree = station({"eicw", "eca", "tdu"})
    assert allthree.eca and allthree.tdu and allthree.params.eicw
    with pytest.raises(ValueError):
        StationState(0, BE, strategies=frozenset({"bogus"}))


def test_combo_names_round_trip():
    for text in ("legacy", "eicw", "eca+tdu", "eicw+eca+tdu"):
        assert combo_name(parse_combo(text)) == text
    assert combo_name(parse_combo("tdu+eicw")) == "eicw+tdu"
    with pytest.raises(ValueError):
        parse_combo("eca+magic")
