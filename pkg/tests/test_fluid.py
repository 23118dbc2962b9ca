from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from p2pspread.equal_optimal import optimal_makespan_equal
from p2pspread.fluid import (
    DegenerateInstance,
    FluidInstance,
    NotCase2,
    TransferPlan,
    build_transfer_plan,
    fluid_general_makespan,
    fluid_single_server,
    reduce_capacities,
    upload_volume,
    verify_plan,
)

F = Fraction


@pytest.mark.parametrize(
    "files,caps,t",
    [((1, 1), (1, 1), 1), ((1, 1, 1), (1, 1, 1), 2), ((6, 1, 1), (1, 1, 1), 6)],
)
def test_general_makespan(files, caps, t):
    assert fluid_general_makespan(FluidInstance(files, caps)) == t


@pytest.mark.parametrize(
    "n,cs,c1,t,alpha",
    [(4, 2, 1, F(2, 3), F(2, 3)), (2, 1, 1, F(1), F(1, 2)), (1, 1, 7, F(1), F(0))],
)
def test_single_server(n, cs, c1, t, alpha):
    assert fluid_single_server(n, cs, c1) == (t, alpha)


def test_symmetric_plan():
    fi = FluidInstance((1, 1, 1), (1, 1, 1))
    plan = build_transfer_plan(fi)
    assert all(a == F(1, 3) for row in plan.alpha for a in row)
    rep = verify_plan(fi, plan)
    assert rep.valid and rep.completion_times == [2, 2, 2]


def test_two_users_direct_only():
    fi = FluidInstance((1, 2), (1, 1))
    plan = build_transfer_plan(fi)
    assert plan.case == "direct" and plan.makespan == 2
    assert plan.alpha == ((1, 0), (0, 1))
    assert verify_plan(fi, plan).valid


def test_two_users_need_a_file():
    with pytest.raises(DegenerateInstance):
        FluidInstance((0, 0), (1, 1))


def test_case2_reduction():
    fi = FluidInstance((6, 1, 1), (1, 1, 1))
    red = reduce_capacities(fi)
    assert red.delta == F(4, 5)
    assert red.gamma == (F(1, 2), F(5, 2), F(5, 2))
    assert red.reduced_capacities == (1, F(5, 6), F(5, 6))
    assert 2 * fi.total_size / sum(red.reduced_capacities) == 6
    plan = build_transfer_plan(fi)
    rep = verify_plan(fi, plan)
    assert plan.makespan == 6 and rep.valid
    assert rep.completion_times == [6, 6, 6]


def test_symmetric_is_not_case2():
    with pytest.raises(NotCase2):
        reduce_capacities(FluidInstance((4, 4, 4), (2, 2, 2)))


def test_bad_plans_are_reported():
    fi = FluidInstance((1, 1, 1), (1, 1, 1))
    good = build_transfer_plan(fi)
    neg = TransferPlan(((F(4, 3), F(-1, 3), 0),) + good.alpha[1:], good.makespan, good.capacities_used, "x")
    assert not verify_plan(fi, neg).valid
    short = TransferPlan(((F(3, 10), F(3, 10), F(3, 10)),) + good.alpha[1:], good.makespan,
                         good.capacities_used, "x")
    rep = verify_plan(fi, short)
    assert not rep.valid and {v.constraint for v in rep.violations} >= {"row sum", "two-hop"}


rat = st.fractions(min_value=0, max_value=5, max_denominator=6)
pos = st.fractions(min_value=F(1, 6), max_value=5, max_denominator=6)


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(st.lists(rat, min_size=n, max_size=n),
                                                       st.lists(pos, min_size=n, max_size=n))))
def test_plans_always_verify(data):
    files, caps = data
    if not any(f > 0 for f in files):
        return
    fi = FluidInstance(tuple(files), tuple(caps))
    plan = build_transfer_plan(fi)
    rep = verify_plan(fi, plan)
    assert rep.valid, rep.summary()
    n = fi.n_users
    if plan.case == "aggregate":
        assert all(t == plan.makespan for t in rep.completion_times)
    if plan.case == "reduced":
        red = reduce_capacities(fi)
        top = red.order[0]
        f1, c1 = fi.file_sizes[top], fi.capacities[top]
        cp = red.reduced_capacities
        assert cp[top] == c1
        assert all(a <= b for a, b in zip(cp, fi.capacities))
        assert (n - 1) * fi.total_size / sum(cp) == f1 / c1
        assert all(f / c <= f1 / c1 for f, c in zip(fi.file_sizes, cp))
        if all(f > 0 for f in fi.file_sizes):
            assert sum(g * f for g, f in zip(red.gamma, fi.file_sizes)) == fi.total_size
        for i in range(n):
            assert upload_volume(fi, plan.alpha, i) == cp[i] * plan.makespan


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 8), pos, rat)
def test_single_server_matches_embedding(n, cs, c1):
    if c1 == 0:
        return
    t, _ = fluid_single_server(n, cs, c1)
    assert t == fluid_general_makespan(FluidInstance.single_server(n, cs, c1))


def test_many_parts_tend_to_fluid_limit():
    for n in (2, 3, 5):
        values = [optimal_makespan_equal(n, m) for m in (1, 10, 100, 1000)]
        assert values == sorted(values, reverse=True)
        assert values[-1] - fluid_single_server(n, 1, 1)[0] <= F(3, 1000)
