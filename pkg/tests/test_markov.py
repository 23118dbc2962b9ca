from fractions import Fraction

import pytest

from p2pspread.markov_exact import (
    AbsorbingBeforeTarget,
    ChainTooLarge,
    DisseminationChain,
    build_chain,
    completion_variance,
    enumerate_transitions,
    alternating_sum_transition,
    expected_makespan,
    hitting_times,
)

F = Fraction


def test_nolist_two_peers_rows():
    c = build_chain(2, "nolist")
    assert c.p(0, 0) == F(1, 4) and c.p(0, 1) == F(3, 4) and c.p(1, 2) == 1


def test_list_two_peers_rows():
    c = build_chain(2, "list")
    assert c.p(0, 1) == 1 and c.p(1, 2) == 1


@pytest.mark.parametrize("scenario", ["list", "nolist"])
@pytest.mark.parametrize("n", range(1, 7))
def test_rows_match_enumeration(n, scenario):
    c = build_chain(n, scenario)
    brute = enumerate_transitions(n, scenario)
    for i in range(n + 1):
        assert c.row(i) == brute[i]
        assert sum(c.row(i)) == 1
        assert all(c.p(i, j) == 0 for j in range(i))


def test_small_exact_values():
    assert expected_makespan(build_chain(2, "list"), exact=True) == 2
    assert expected_makespan(build_chain(2, "nolist"), exact=True) == F(7, 3)


@pytest.mark.parametrize(
    "scenario,n,value",
    [("nolist", 8, 5.956), ("list", 16, 5.319), ("list", 8, 4.172), ("nolist", 32, 9.710)],
)
def test_table_values(scenario, n, value):
    assert abs(float(expected_makespan(build_chain(n, scenario))) - value) <= 0.001


def test_decimal_matches_rational():
    c = build_chain(20, "nolist")
    exact = expected_makespan(c, exact=True)
    approx = expected_makespan(c, precision=40)
    assert abs(F(approx) - exact) < F(1, 10**30)


def test_monotone_and_list_faster():
    prev = {"list": 0, "nolist": 0}
    for n in range(1, 40):
        vals = {s: expected_makespan(build_chain(n, s), exact=True) for s in prev}
        assert vals["list"] <= vals["nolist"]
        for s in prev:
            assert vals[s] > prev[s]
        prev = vals


def test_hitting_times_decrease():
    k = hitting_times(build_chain(12, "nolist"), exact=True)
    assert all(a > b for a, b in zip(k, k[1:]))


def test_variance_small_case():
    # NoList N=2: geometric wait with success 3/4, then one more round
    assert completion_variance(build_chain(2, "nolist")) == F(1, 4) / F(9, 16)


def test_stuck_state_raises():
    chain = DisseminationChain(1, "list", ((1, (1,)), (1, (1,))))
    with pytest.raises(AbsorbingBeforeTarget):
        expected_makespan(chain)


def test_size_guard():
    with pytest.raises(ChainTooLarge):
        build_chain(513, "list")


def test_alternating_sum_formula():
    for n in (2, 5, 9):
        assert alternating_sum_transition(n, 0, 0) == 1
        assert alternating_sum_transition(n, n, 0) == 1
    assert alternating_sum_transition(2, 1, 1) == build_chain(2, "nolist").p(1, 2)
    with pytest.raises(ValueError):
        alternating_sum_transition(3, 2, 2)
