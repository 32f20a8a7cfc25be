"""Worst-case analysis: recurrences, closed forms, solver, oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hammersim.security import (AnalysisParams, OracleCheck, RecurrenceConfig,
                                act_time_ns, brute_force_oracle, bw_bound,
                                discipline_for_scheme, hc_chronus, hc_prac,
                                hc_pvac, max_initial_pool,
                                pool_recurrence_prac, pool_recurrence_pvac,
                                security_table, small_oracle_geometry,
                                solve_nbo, worst_case_hc)
from hammersim.security import _nr_tables, DISC_AGGRESSOR, DISC_VICTIM


def params(n_mit: int, **kw) -> AnalysisParams:
    return AnalysisParams(n_mit=n_mit, **kw)


# -- configuration -----------------------------------------------------------

def test_recurrence_config_validation():
    with pytest.raises(ValueError):
        RecurrenceConfig(variant="guess")
    with pytest.raises(ValueError):
        RecurrenceConfig(granularity="row")
    with pytest.raises(ValueError):
        RecurrenceConfig(setup_budget_ns=0)
    assert RecurrenceConfig(setup_budget_ns=None).setup_budget_ns is None


def test_analysis_params_delay_follows_n_mit():
    assert params(4).delay == 4
    assert params(4, abo_delay=0).delay == 0
    with pytest.raises(ValueError):
        params(3)


def test_disciplines_and_act_times():
    assert discipline_for_scheme("PVAC") == DISC_VICTIM
    assert discipline_for_scheme("PRAC") == DISC_AGGRESSOR
    assert discipline_for_scheme("QPRAC") == DISC_AGGRESSOR
    assert discipline_for_scheme("MOAT") == DISC_AGGRESSOR
    assert discipline_for_scheme("Chronus") is None
    with pytest.raises(ValueError):
        discipline_for_scheme("TRR")
    assert act_time_ns(DISC_VICTIM) == 48.0
    assert act_time_ns(DISC_AGGRESSOR) == 52.0


def test_initial_pool_extremes():
    assert max_initial_pool(DISC_VICTIM, 65536) == 52428
    assert max_initial_pool(DISC_AGGRESSOR, 65536) == 65535
    assert max_initial_pool(DISC_VICTIM, 256) == 204
    with pytest.raises(ValueError):
        max_initial_pool("bulk", 65536)


# -- the pool recurrence ------------------------------------------------------

def test_victim_pool_recurrence_hand_trace():
    p = params(4)  # den = abo_act + delay = 7, removes 4 per alert
    assert pool_recurrence_pvac(0, p) == 0
    assert pool_recurrence_pvac(1, p) == 1
    # 22 -> 3 alerts (22//7), 10 -> 1 alert, 6 -> stall: three rounds.
    assert pool_recurrence_pvac(22, p) == 3


def test_aggressor_pool_recurrence_hand_trace():
    p = params(1)  # den = 4, subtract br = 2, terminate at 4
    # 10 -> 8//4 = 2 removed? no: alerts=2, removes 2 -> 8; then 6//4 = 1
    # per round: 8 -> 7 -> 6 -> 5, where 5 - 2 = 3 < 4 stalls.
    assert pool_recurrence_prac(10, p) == 5
    assert pool_recurrence_prac(4, p) == 1  # already at the terminal size
    with pytest.raises(ValueError):
        pool_recurrence_prac(-1, p)


@settings(max_examples=60, deadline=None)
@given(r1=st.integers(min_value=0, max_value=2500),
       n_mit=st.sampled_from([1, 2, 4]),
       variant=st.sampled_from(["literal", "carry"]),
       victim=st.booleans())
def test_vector_table_matches_scalar_reference(r1, n_mit, variant, victim):
    p = AnalysisParams(n_mit=n_mit, rows_per_bank=4096,
                       recurrence=RecurrenceConfig(variant=variant))
    if victim:
        scalar = pool_recurrence_pvac(r1, p)
        _, raw = _nr_tables(DISC_VICTIM, p)
    else:
        scalar = pool_recurrence_prac(r1, p)
        _, raw = _nr_tables(DISC_AGGRESSOR, p)
    assert scalar == int(raw[r1])


def test_prefix_max_table_is_running_maximum():
    p = params(2, rows_per_bank=4096)
    M, raw = _nr_tables(DISC_AGGRESSOR, p)
    assert np.array_equal(M, np.maximum.accumulate(raw))
    assert np.all(np.diff(M) >= 0)


# -- hammered-count closed forms ----------------------------------------------

def test_hc_formulas_at_tiny_pools():
    p = params(4)
    assert hc_pvac(64, p, r1=1) == 63 + 1 + 4 + 3 + 2
    assert hc_prac(64, p, r1=1) == 4 * 63 + 4 * 1 + 4 + 3 + 2 - 1


def test_hc_chronus_closed_form():
    p = params(1)
    assert hc_chronus(1, p) == 5
    assert hc_chronus(31, p) == 125
    assert hc_chronus(511, p) == 2045


def test_worst_case_hc_frozen_point():
    hc, worst_r1, nr = worst_case_hc("PVAC", 11, params(4))
    assert (hc, worst_r1, nr) == (32, 29455, 13)


def test_worst_case_hc_monotone_in_n_bo():
    p = params(2)
    hcs = [worst_case_hc("PRAC", n_bo, p)[0] for n_bo in range(2, 40)]
    assert hcs == sorted(hcs)


def test_setup_budget_only_tightens_the_bound():
    no_budget = params(1, recurrence=RecurrenceConfig(setup_budget_ns=None))
    budgeted = params(1)
    for scheme in ("PVAC", "PRAC"):
        loose, _, _ = worst_case_hc(scheme, 100, no_budget)
        tight, _, _ = worst_case_hc(scheme, 100, budgeted)
        assert tight <= loose


# -- the threshold solver ------------------------------------------------------

FROZEN_TABLE = {
    ("PVAC", 1, 32): "inf", ("PVAC", 1, 64): "22",
    ("PVAC", 1, 128): "89", ("PVAC", 1, 2048): "2020",
    ("PVAC", 2, 32): "5", ("PVAC", 2, 64): "37",
    ("PVAC", 2, 128): "103", ("PVAC", 2, 2048): "2028",
    ("PVAC", 4, 32): "11", ("PVAC", 4, 64): "43",
    ("PVAC", 4, 128): "108", ("PVAC", 4, 2048): "2032",
    ("PRAC", 1, 32): "inf", ("PRAC", 1, 64): "inf",
    ("PRAC", 1, 128): "inf", ("PRAC", 1, 2048): "488",
    ("PRAC", 2, 32): "inf", ("PRAC", 2, 64): "inf",
    ("PRAC", 2, 128): "10", ("PRAC", 2, 2048): "498",
    ("PRAC", 4, 32): "inf", ("PRAC", 4, 64): "2",
    ("PRAC", 4, 128): "19", ("PRAC", 4, 2048): "503",
    ("Chronus", 1, 32): "7", ("Chronus", 1, 64): "15",
    ("Chronus", 1, 128): "31", ("Chronus", 1, 2048): "511",
}


def test_threshold_table_regression():
    points = security_table([32, 64, 128, 2048])
    assert len(points) == 28
    got = {(p.scheme, p.n_mit, p.max_hc): p.label for p in points}
    assert got == FROZEN_TABLE


def test_solver_labels_and_feasibility():
    point = solve_nbo("PVAC", 32, params(1))
    assert not point.feasible and point.n_bo == 0 and point.label == "inf"
    point = solve_nbo("PVAC", 64, params(1))
    assert point.feasible and point.label == "22"
    assert worst_case_hc("PVAC", 22, params(1))[0] <= 64
    assert worst_case_hc("PVAC", 23, params(1))[0] > 64


def test_solver_chronus_closed_form():
    assert solve_nbo("Chronus", 5, params(1)).n_bo == 1
    assert not solve_nbo("Chronus", 4, params(1)).feasible
    with pytest.raises(ValueError):
        solve_nbo("Chronus", 0, params(1))


def test_solver_monotone_in_max_hc():
    p = params(4)
    solved = [solve_nbo("PVAC", hc, p).n_bo for hc in range(16, 200, 8)]
    assert solved == sorted(solved)


def test_carry_variant_changes_the_table():
    alt = security_table([32, 64, 128, 2048],
                         recurrence=RecurrenceConfig(variant="carry"))
    got = {(p.scheme, p.n_mit, p.max_hc): p.label for p in alt}
    assert got != FROZEN_TABLE


# -- the bandwidth bound -------------------------------------------------------

def test_bw_bound_reference_points():
    assert bw_bound(4, 237, 48.0) == pytest.approx(0.1095804, abs=5e-7)
    assert bw_bound(4, 52, 52.0) == pytest.approx(0.3411306, abs=5e-7)
    assert bw_bound(1, 15, 48.0) == pytest.approx(0.3271028, abs=5e-7)
    assert bw_bound(4, 43, 48.0) == pytest.approx(0.4041570, abs=5e-7)


def test_bw_bound_validation_and_shape():
    with pytest.raises(ValueError):
        bw_bound(0, 64, 48.0)
    with pytest.raises(ValueError):
        bw_bound(1, 64, 0.0)
    # More frequent alerts (smaller n_bo) can only cost more bandwidth.
    series = [bw_bound(4, n_bo, 48.0) for n_bo in range(16, 256, 16)]
    assert series == sorted(series, reverse=True)
    assert all(0 < x < 1 for x in series)


# -- the brute-force oracle ----------------------------------------------------

def test_oracle_check_verdict():
    assert OracleCheck("PVAC", 1, 8, 4, observed_hc=10, bound_hc=10).sound
    assert not OracleCheck("PVAC", 1, 8, 4, observed_hc=11, bound_hc=10).sound


def test_oracle_rejects_big_banks():
    with pytest.raises(ValueError):
        brute_force_oracle("PVAC", 16, 1,
                           geometry=small_oracle_geometry(rows=8192))


def test_oracle_bounds_hold_on_small_banks():
    for scheme, n_mit in (("PVAC", 4), ("PRAC", 1)):
        check = brute_force_oracle(scheme, 16, n_mit)
        assert check.sound, (scheme, check)
        assert check.observed_hc >= 16  # the attack does beat the threshold
