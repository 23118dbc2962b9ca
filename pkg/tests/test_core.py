from fractions import Fraction

import pytest

from p2pspread.core import (
    ContinuousSchedule,
    EmptySchedule,
    Instance,
    InvalidInstance,
    RoundSchedule,
    Upload,
    dump_json,
    load_json,
    schedule_makespan,
    to_fraction,
    validate_instance,
    verify_schedule,
)


def up(s, e, u, d, k):
    return Upload(Fraction(s), Fraction(e), u, d, k)


def test_to_fraction_keeps_decimals_exact():
    assert to_fraction(0.1) == Fraction(1, 10)
    assert to_fraction("3/7") == Fraction(3, 7)
    assert to_fraction(" 2.5 ") == Fraction(5, 2)
    with pytest.raises(TypeError):
        to_fraction(True)


@pytest.mark.parametrize(
    "inst,field",
    [
        (Instance(0, 1, 1, ()), "n_peers"),
        (Instance(1, 0, 1, (1,)), "n_parts"),
        (Instance(1, 1, 0, (1,)), "server_capacity"),
        (Instance(2, 1, 1, (1,)), "peer_capacities"),
        (Instance(1, 1, 1, (-1,)), "peer_capacities"),
    ],
)
def test_invalid_instances_name_the_field(inst, field):
    with pytest.raises(InvalidInstance) as err:
        validate_instance(inst)
    assert err.value.field == field


def test_instance_json_round_trip(tmp_path):
    inst = Instance(2, 3, Fraction(3, 2), (Fraction(1, 3), 0))
    path = tmp_path / "inst.json"
    dump_json(inst.to_json(), path)
    assert Instance.from_json(load_json(path)) == inst
    assert b"\r\n" not in path.read_bytes()


def test_from_json_missing_field():
    with pytest.raises(InvalidInstance) as err:
        Instance.from_json({"n_peers": 1, "n_parts": 1, "server_capacity": 1})
    assert err.value.field == "peer_capacities"


def test_decimal_literals_parse_exactly(tmp_path):
    path = tmp_path / "i.json"
    path.write_text('{"n_peers": 1, "n_parts": 1, "server_capacity": 0.1, "peer_capacities": [0.3]}')
    inst = Instance.from_json(load_json(path))
    assert inst.server_capacity == Fraction(1, 10)
    assert inst.peer_capacities == (Fraction(3, 10),)


def test_makespan_of_empty_schedule():
    with pytest.raises(EmptySchedule):
        schedule_makespan(ContinuousSchedule(()))


def test_single_upload_schedule_is_valid():
    inst = Instance.equal(1, 1)
    rep = verify_schedule(inst, ContinuousSchedule((up(0, 1, 0, 1, 1),)))
    assert rep.valid and rep.makespan == 1
    assert rep.replica_counts == {Fraction(1): (1,)}


def _names(rep):
    return {v.constraint for v in rep.violations}


def test_relay_before_arrival_is_caught():
    inst = Instance.equal(2, 1)
    sched = ContinuousSchedule((up(0, 1, 0, 1, 1), up(Fraction(1, 2), Fraction(3, 2), 1, 2, 1)))
    assert "source availability" in _names(verify_schedule(inst, sched))


def test_relay_at_arrival_is_fine():
    inst = Instance.equal(2, 1)
    sched = ContinuousSchedule((up(0, 1, 0, 1, 1), up(1, 2, 1, 2, 1)))
    assert verify_schedule(inst, sched).valid


def test_parallel_uploads_violate_connection():
    inst = Instance.equal(2, 2)
    h = Fraction(1, 2)
    sched = ContinuousSchedule((up(0, h, 0, 1, 1), up(0, h, 0, 2, 1), up(h, 1, 0, 1, 2), up(h, 1, 0, 2, 2)))
    assert _names(verify_schedule(inst, sched)) == {"connection"}


def test_wrong_duration_and_duplicate_and_missing():
    inst = Instance.equal(2, 1)
    sched = ContinuousSchedule((up(0, 2, 0, 1, 1), up(2, 3, 0, 1, 1)))
    names = _names(verify_schedule(inst, sched))
    assert {"duration", "exclusivity", "completeness"} <= names


def test_download_overlap_only_when_requested():
    inst = Instance(2, 2, 1, (1, 1))
    h = Fraction(1, 2)
    # peer 2 takes part 1 from peer 1 and part 2 from the server at once
    clash = ContinuousSchedule((
        up(0, h, 0, 1, 1), up(h, 1, 1, 2, 1), up(h, 1, 0, 2, 2), up(1, Fraction(3, 2), 2, 1, 2),
    ))
    assert verify_schedule(inst, clash).valid
    assert _names(verify_schedule(inst, clash, check_downloads=True)) == {"download"}


def test_sequential_downloads_pass_download_check():
    inst = Instance(2, 2, 1, (1, 1))
    h = Fraction(1, 2)
    sched = ContinuousSchedule((
        up(0, h, 0, 1, 1), up(h, 1, 0, 1, 2), up(h, 1, 1, 2, 1), up(1, Fraction(3, 2), 0, 2, 2),
    ))
    assert verify_schedule(inst, sched, check_downloads=True).valid


def test_malformed_upload():
    inst = Instance.equal(1, 1)
    rep = verify_schedule(inst, ContinuousSchedule((up(0, 1, 0, 0, 1),)))
    assert "well-formed" in _names(rep)


def test_round_schedule_conversion():
    rs = RoundSchedule(2, 1, (frozenset({(0, 1, 1)}), frozenset({(0, 2, 1), (1, 2, 1)})))
    assert rs.check_rounds() == ["round 2: a downloader appears twice"]
    cont = RoundSchedule(2, 1, (frozenset({(0, 1, 1)}), frozenset({(1, 2, 1)}))).to_continuous(2)
    assert [(u.start, u.end) for u in cont.uploads] == [(0, Fraction(1, 2)), (Fraction(1, 2), 1)]
    assert ContinuousSchedule.from_json(cont.to_json()) == cont
