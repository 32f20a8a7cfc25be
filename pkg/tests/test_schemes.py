"""Scheme state machines: counting, alerts, RFM service, proactive hooks."""

import pytest

from hammersim.dram import DeviceGeometry
from hammersim.schemes import (DEFAULT_QUEUE_DEPTH, MitigationAction,
                               SchemeConfig, SchemeState, preset,
                               with_queue_depth)


def small_geometry(rows: int = 256, bits: int = 16) -> DeviceGeometry:
    return DeviceGeometry(rows_per_bank=rows, banks=1, rows_per_dsa=rows,
                          counter_bits=bits, blast_radius=2)


def make_state(scheme: str, n_bo: int, n_mit: int = 1, **kw) -> SchemeState:
    return SchemeState(preset(scheme, n_bo, n_mit, **kw), small_geometry())


# -- configuration ---------------------------------------------------------

def test_preset_timing_and_semantics():
    assert preset("PVAC", 64).counter_semantics == "VictimCount"
    assert preset("PVAC", 64).timing == "Default"
    assert preset("PRAC", 64).timing == "PRAC"
    assert preset("Chronus", 64).timing == "Default"
    assert preset("MOAT", 64).n_mit == 1
    assert preset("MOAT", 64).tRFC_ns == 410.0
    assert preset("QPRAC", 64).proactive_threshold == 32
    assert preset("QPRAC", 64).proactive_period == 1


def test_config_rejects_mismatched_semantics():
    with pytest.raises(ValueError):
        SchemeConfig(scheme="PVAC", n_bo=8, counter_semantics="AggressorCount")
    with pytest.raises(ValueError):
        SchemeConfig(scheme="PRAC", n_bo=8, timing="Default",
                     counter_semantics="AggressorCount")
    with pytest.raises(ValueError):
        SchemeConfig(scheme="MOAT", n_bo=8, n_mit=2, timing="PRAC",
                     tRFC_ns=410.0)
    with pytest.raises(ValueError):
        SchemeConfig(scheme="PRAC", n_bo=0, timing="PRAC")


def test_threshold_must_fit_counter_width():
    narrow = small_geometry(bits=4)  # counts saturate at 15
    with pytest.raises(ValueError):
        SchemeState(preset("PRAC", 20), narrow)
    SchemeState(preset("PRAC", 15), narrow)  # at the cap is fine


def test_with_queue_depth_round_trip():
    cfg = with_queue_depth(preset("PVAC", 64), 7)
    assert cfg.queue_depth == 7
    assert preset("PVAC", 64).queue_depth == DEFAULT_QUEUE_DEPTH


def test_unknown_row_rejected():
    state = make_state("PRAC", 64)
    with pytest.raises(ValueError):
        state.on_act(256)
    with pytest.raises(ValueError):
        state.on_act(-1)


# -- activation counting and alerts ----------------------------------------

def test_victim_counting_alerts_on_neighbours_not_self():
    state = make_state("PVAC", 3)
    assert state.on_act(10) is None
    assert state.on_act(10) is None
    action = state.on_act(10)
    assert action is not None and action.kind == "Alert"
    # The hammered row resets itself each time; its four victims cross
    # together on the third activation.
    assert action.rows == [8, 9, 11, 12]
    assert state.bank.get(10) == 0
    assert state.stat_alerts == 1


def test_aggressor_counting_alerts_on_self():
    state = make_state("PRAC", 3)
    assert state.on_act(10) is None
    assert state.on_act(10) is None
    action = state.on_act(10)
    assert action is not None
    assert action.kind == "Alert"
    assert action.rows == [10]
    assert state.bank.get(10) == 3


def test_adjacent_ping_pong_keeps_hammered_rows_reset():
    # Two adjacent rows hammered alternately reset each other's counter on
    # every turn, so neither activated row ever accumulates.  Disturbance
    # still lands on the flanking rows, two counts per round trip.
    state = make_state("PVAC", 8)
    alerts = []
    for i in range(8):
        row = 10 if i % 2 == 0 else 11
        action = state.on_act(row)
        assert state.bank.get(10) <= 1
        assert state.bank.get(11) <= 1
        if action is not None:
            alerts.append((i, action))
    assert len(alerts) == 1
    step, action = alerts[0]
    assert step == 7  # fourth round trip pushes both flanks to the line
    assert action.rows == [9, 12]
    assert state.bank.get(9) == 8 and state.bank.get(12) == 8


def test_unit_stride_sweep_bounds_interior_rows():
    # Rows inside a contiguous sweep are refreshed (reset) once per lap and
    # absorb at most one count from each in-range neighbour in between, so
    # they stay within 2*blast_radius no matter how long the sweep runs.
    state = make_state("PVAC", 10)
    lo, hi = 50, 80
    interior = range(lo + 2, hi - 1)
    for _ in range(3):
        for row in range(lo, hi + 1):
            assert state.on_act(row) is None
            assert max(state.bank.get(r) for r in interior) <= 4
    # The rows flanking the sweep are never activated and accumulate.
    assert state.bank.get(lo - 1) == 6   # two in-range neighbours per lap
    assert state.bank.get(lo - 2) == 3   # one in-range neighbour per lap


def test_multiple_victims_cross_together_single_alert():
    state = make_state("PVAC", 8)
    actions = [state.on_act(10) for _ in range(8)]
    assert all(a is None for a in actions[:7])
    assert actions[7] is not None and actions[7].rows == [8, 9, 11, 12]
    assert state.stat_alerts == 1


# -- alert deferral ---------------------------------------------------------

def test_parked_alert_fires_after_hold():
    state = make_state("PRAC", 3)
    for _ in range(3):
        assert state.on_act(10, alert_allowed=False) is None
    assert state.pending_alert
    action = state.take_pending_alert()
    assert action is not None and action.kind == "Alert"
    assert action.rows == [10]


def test_parked_alert_deasserts_once_serviced():
    # The alert line is level-sensitive: if the hold-off window's own RFMs
    # already cleared every hot counter, nothing fires afterwards.
    state = make_state("PRAC", 3)
    for _ in range(3):
        state.on_act(10, alert_allowed=False)
    assert state.pending_alert
    applied = state.on_rfm()
    assert (10, "reset") in applied
    assert state.take_pending_alert() is None
    assert state.bank.get(10) == 0


# -- refresh counting --------------------------------------------------------

def test_refresh_passes_walk_aggressor_counters_to_threshold():
    state = make_state("PRAC", 64)
    group = list(range(8))
    for i in range(63):
        assert state.on_refresh(group) is None
    action = state.on_refresh(group)
    assert action is not None and action.kind == "Alert"
    assert action.rows == group
    assert all(state.bank.get(r) == 64 for r in group)


def test_refresh_only_victim_counts_peak_at_twice_blast_radius():
    state = make_state("PVAC", 64)
    rows = state.geometry.rows_per_bank
    peak = 0
    for _ in range(2):  # two full retention sweeps
        for start in range(0, rows, 8):
            action = state.on_refresh(range(start, start + 8))
            assert action is None
            peak = max(peak, state.bank.core.max_count())
    assert peak == 4  # flanks of the sweep front, just before their own turn


def test_chronus_refresh_leaves_counters_alone():
    state = make_state("Chronus", 64)
    state.on_act(100)
    assert state.on_refresh(range(8, 16)) is None
    assert state.bank.get(100) == 1
    assert all(state.bank.get(r) == 0 for r in range(8, 16))


# -- RFM service -------------------------------------------------------------

def test_aggressor_rfm_resets_and_disturbs_victims():
    state = make_state("PRAC", 100)
    for _ in range(3):
        state.on_act(10)
    applied = state.on_rfm()
    assert applied[0] == (10, "reset")
    assert sorted(r for r, what in applied if what == "act") == [8, 9, 11, 12]
    assert state.bank.get(10) == 0
    assert all(state.bank.get(r) == 1 for r in (8, 9, 11, 12))


def test_victim_rfm_services_queue_top_then_cascades():
    # One RFM's worth of PVAC work pops the four hottest victims in turn.
    # Each service is itself a counted activation, so later picks shift as
    # earlier refreshes disturb their neighbours; the whole cascade is
    # deterministic (count-descending, lowest row on ties).
    state = make_state("PVAC", 100)
    state.on_act(9)
    state.on_act(13)  # row 11 is a victim of both, so it tops the queue
    applied = state.on_rfm()
    assert applied == [(11, "refresh"), (10, "refresh"),
                       (12, "refresh"), (8, "refresh")]
    # Rows serviced late enough to dodge later bumps end the burst reset.
    assert state.bank.get(8) == 0
    assert state.bank.get(12) == 0
    # Earlier services absorbed bumps from the rest of the burst.
    assert state.bank.get(9) == 3
    assert state.bank.get(11) == 2


def test_victim_rfm_burst_services_four_rows():
    state = make_state("PVAC", 8)
    for _ in range(8):
        state.on_act(10, alert_allowed=False)
        state.on_act(30, alert_allowed=False)
    applied = state.on_rfm()
    assert [what for _, what in applied] == ["refresh"] * 4
    assert [row for row, _ in applied] == [8, 9, 11, 12]
    assert state.bank.get(12) == 0  # the last serviced row ends reset


def test_rfm_with_empty_queue_is_noop():
    for scheme in ("PRAC", "PVAC", "Chronus"):
        state = make_state(scheme, 8)
        assert state.on_rfm() == []


def test_chronus_alert_services_until_no_counter_is_hot():
    state = make_state("Chronus", 3)
    hot_rows = [10, 20, 30, 40, 50, 60, 70]
    for row in hot_rows:
        for _ in range(3):
            state.on_act(row, alert_allowed=False)
    action = state.take_pending_alert()
    assert action is not None and action.kind == "Alert"
    assert state.stat_alerts == 1
    bursts = 0
    while True:
        applied = state.on_rfm()
        assert applied, "adaptive service must find every hot row"
        bursts += 1
        if not state.rfm_pending_more():
            break
    assert bursts == len(hot_rows)
    assert state.bank.core.max_count() < 3
    assert all(state.bank.get(r) == 0 for r in hot_rows)


def test_chronus_finds_hot_row_displaced_from_queue():
    # A hot row evicted from a tiny queue must still be serviced during an
    # adaptive alert; the state falls back to scanning the bank.
    state = SchemeState(with_queue_depth(preset("Chronus", 3), 1),
                        small_geometry())
    for _ in range(3):
        state.on_act(10, alert_allowed=False)
    for _ in range(4):
        state.on_act(40, alert_allowed=False)  # evicts row 10 from the queue
    serviced = []
    while True:
        applied = state.on_rfm()
        if not applied:
            break
        serviced.append(applied[0][0])
        if not state.rfm_pending_more():
            break
    assert set(serviced) == {10, 40}
    assert state.bank.core.max_count() < 3


# -- proactive mitigation ----------------------------------------------------

def test_proactive_fires_at_threshold_on_refresh_boundary():
    state = make_state("QPRAC", 64)
    for _ in range(32):
        state.on_act(10)
    action = state.on_refresh(range(200, 208))
    assert action is not None and action.kind == "ProactiveRefresh"
    assert action.rows == [10]
    assert state.bank.get(10) == 0
    assert state.bank.get(9) == 1  # serviced as a real refresh, not an erase
    assert state.stat_proactive == 1


def test_proactive_respects_threshold():
    state = make_state("QPRAC", 64)
    for _ in range(31):  # one short of n_bo // 2
        state.on_act(10)
    assert state.on_refresh(range(200, 208)) is None
    assert state.stat_proactive == 0
    assert state.bank.get(10) == 31


def test_proactive_respects_period():
    state = make_state("MOAT", 64)  # proactive every fourth refresh
    for _ in range(40):
        state.on_act(10)
    results = [state.on_refresh(range(200, 208)) for _ in range(4)]
    assert results[:3] == [None, None, None]
    assert results[3] is not None and results[3].kind == "ProactiveRefresh"
    assert state.stat_proactive == 1


def test_pvac_proactive_refreshes_victims():
    state = make_state("PVAC", 64)  # threshold 32, every refresh
    for _ in range(32):
        state.on_act(10, alert_allowed=True)
    action = state.on_refresh(range(200, 208))
    assert action is not None and action.kind == "ProactiveRefresh"
    assert action.rows == [8, 9, 11, 12]
    assert state.bank.get(12) == 0


def test_alert_burst_length_by_scheme():
    assert make_state("PRAC", 64, n_mit=4).alert_burst_length() == 4
    assert make_state("PVAC", 64, n_mit=2).alert_burst_length() == 2
    assert make_state("Chronus", 64).alert_burst_length() > 20


def test_mitigation_action_shape():
    action = MitigationAction("Alert", [3, 4])
    assert action.kind == "Alert" and action.rows == [3, 4]
