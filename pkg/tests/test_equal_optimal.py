from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from p2pspread.core import Instance, InvalidSchedule, RoundSchedule, verify_schedule
from p2pspread.equal_optimal import (
    build_schedule,
    floor_log2,
    optimal_makespan_equal,
    optimal_rounds,
    replica_profile,
    replica_count_formula,
    unused_upload_slots,
)


@pytest.mark.parametrize("n,m,rounds", [(1, 5, 5), (3, 2, 3), (13, 4, 7)])
def test_optimal_rounds(n, m, rounds):
    assert optimal_rounds(n, m) == rounds


@pytest.mark.parametrize(
    "n,m,c,t",
    [(3, 2, 1, Fraction(3, 2)), (1, 1, 1, 1), (4, 2, 2, 1)],
)
def test_optimal_makespan(n, m, c, t):
    assert optimal_makespan_equal(n, m, c) == t


def test_three_peers_two_parts_profile():
    prof = replica_profile(build_schedule(3, 2), 3, 2)
    assert [prof.count(r, 1) for r in (1, 2, 3)] == [1, 2, 3]
    assert [prof.count(r, 2) for r in (1, 2, 3)] == [0, 1, 3]
    cont = build_schedule(3, 2).to_continuous()
    assert cont.makespan == Fraction(3, 2)


def test_single_peer_gets_parts_in_order():
    sched = build_schedule(1, 3)
    assert [sorted(r) for r in sched.rounds] == [[(0, 1, 1)], [(0, 1, 2)], [(0, 1, 3)]]
    assert replica_profile(sched, 1, 1 * 3).count(1, 1) == 1


def test_single_part_single_peer():
    assert replica_profile(build_schedule(1, 1), 1, 1).count(1, 1) == 1


def test_fifteen_peers_four_parts_table_column():
    prof = replica_profile(build_schedule(15, 4), 15, 4)
    assert prof.count(4, 1) == 8  # round n+1, part 1: 2^n


def test_seven_peers_three_parts_matches_table():
    prof = replica_profile(build_schedule(7, 3), 7, 3)
    assert [prof.count(r, 1) for r in (3, 4, 5)] == [4, 7, 7]
    assert [prof.count(r, 3) for r in (3, 4, 5)] == [1, 3, 7]


def test_profile_rejects_invalid_schedule():
    bad = RoundSchedule(2, 1, (frozenset({(1, 2, 1)}),))
    with pytest.raises(InvalidSchedule):
        replica_profile(bad, 2, 1)


def test_monotone_in_n_and_m():
    for n in range(1, 40):
        for m in range(1, 6):
            assert optimal_makespan_equal(n, m) <= optimal_makespan_equal(n + 1, m)
            assert optimal_makespan_equal(n, m + 1) <= optimal_makespan_equal(n, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 70), st.integers(1, 8))
def test_construction_properties(n, m):
    sched = build_schedule(n, m)
    inst = Instance.equal(n, m)
    rep = verify_schedule(inst, sched.to_continuous(), check_downloads=True)
    assert rep.valid, rep.summary()
    assert len(sched) == optimal_rounds(n, m)
    assert sum(len(r) for r in sched.rounds) == n * m
    prof = replica_profile(sched, n, m)
    for t in range(len(sched)):
        for k in range(1, m + 1):
            assert prof.count(t, k) <= prof.count(t + 1, k) <= n
    if n > 1:
        x = n - 2 ** floor_log2(n) + 1
        assert unused_upload_slots(sched) == n + m - 2 * x
        lo = floor_log2(n)
        for j in range(m):
            for k in range(1, m + 1):
                assert prof.count(lo + j, k) == replica_count_formula(n, m, lo + j, k)


def test_capacity_scaling():
    cont = build_schedule(5, 3).to_continuous(Fraction(3, 2))
    inst = Instance.equal(5, 3, Fraction(3, 2))
    assert verify_schedule(inst, cont, check_downloads=True).valid
    assert cont.makespan == optimal_makespan_equal(5, 3, Fraction(3, 2))
