import pytest

from wg7cube import cipher, trail

I1 = (0, 36, 37, 73, 74, 75, 76)


def test_rounds_to_stage22():
    assert trail.rounds_to_stage22(22) == 0
    assert trail.rounds_to_stage22(0) == trail.rounds_to_stage22(11) == 1
    assert trail.rounds_to_stage22(12) == 2
    assert trail.rounds_to_stage22(10) == 11


def test_roundspec_validation():
    with pytest.raises(ValueError):
        trail.RoundSpec(3, cube=(81,))
    with pytest.raises(ValueError):
        trail.RoundSpec(3, key_bits=(80,))
    with pytest.raises(ValueError):
        trail.RoundSpec(-1)


def test_zero_rounds_accepts_only_filter_inputs():
    eng = trail.TrailEngine()
    assert eng.reaches_unit_output(trail.RoundSpec(0, cube=(80,)))
    assert not eng.reaches_unit_output(trail.RoundSpec(0, cube=(0,)))
    assert not eng.reaches_unit_output(trail.RoundSpec(1))


def test_zero_rounds_cube_80_involves_filter_keys():
    J = trail.involved_keys(0, (80,))
    assert set(J) <= {77, 78, 79}


def test_successor_weight_never_drops_to_zero():
    eng = trail.TrailEngine()
    for pos in (0, 77, 154, 160):
        assert 0 not in eng.successors(1 << pos)


def test_bit_outside_stage22_moves_one_stage():
    eng = trail.TrailEngine()
    assert eng.successors(1 << 8) == {1 << 1}


def test_table2_first_row():
    J = trail.involved_keys(14, I1)
    assert trail.format_indices(J) == "0-6,39-48,77-79"
    assert len(J) == 20


def test_find_trail_replays():
    spec = trail.RoundSpec(14, I1, (0,))
    t = trail.TrailEngine().find_trail(spec)
    assert t is not None and len(t) == 15
    assert t[0] == spec.initial_vector()
    assert trail.check_trail(t)
    assert not trail.check_trail([t[0], t[0]])


def test_unreduced_search_agrees_on_small_instance():
    spec = trail.RoundSpec(3, (79, 80), (78,))
    a = trail.TrailEngine(reduce=True, prune=True).reaches_unit_output(spec)
    b = trail.TrailEngine(reduce=False, prune=False).reaches_unit_output(spec)
    assert a == b


def test_budget_exceeded_is_raised():
    with pytest.raises(trail.BudgetExceeded):
        trail.reaches_unit_output(trail.RoundSpec(14, I1, (0,)), budget=10)


def test_key_others_free_matches_zero():
    assert trail.involved_keys(4, (79, 80), key_others="free") == trail.involved_keys(4, (79, 80))


def test_index_ranges_roundtrip():
    idx = (0, 1, 2, 5, 7, 8, 9, 79)
    assert trail.format_indices(idx) == "0-2,5,7-9,79"
    assert trail.parse_indices("0-2,5,7-9,79") == idx


def test_record_json():
    rec = trail.InvolvedKeyRecord("I1", 14, I1, trail.parse_indices("0-6,39-48,77-79"))
    assert rec.log2_time == 27
    assert '"J": "0-6,39-48,77-79"' in rec.to_json()


@pytest.mark.slow
@pytest.mark.parametrize("name,rounds,cube,expect", [
    ("I2", 15, (35, 37, 73, 74, 75, 76, 80), "0-10,39-52,77-79"),
    ("I3", 16, (36, 37, 73, 74, 75, 76, 78), "0-13,39-55,77-79"),
])
def test_table2_later_rows(name, rounds, cube, expect):
    assert trail.format_indices(trail.involved_keys(rounds, cube)) == expect


def test_workers_give_same_answer():
    assert trail.involved_keys(3, (80,), workers=2) == trail.involved_keys(3, (80,))


def test_key_bit_positions_used_for_initial_vector():
    spec = trail.RoundSpec(0, (80,), (77,))
    assert spec.initial_vector() == (1 << cipher.iv_bit_position(80)) | (1 << 154)
