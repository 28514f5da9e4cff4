import numpy as np
import pytest

from wg7cube import cipher, divprop, field, tables


def test_labels_are_an_involution():
    for m in range(128):
        assert tables.relabel(tables.relabel(m)) == m
    assert tables.relabel(1) == 1 << 6


def test_beta_system_has_seventeen_terms():
    assert int(tables.beta_system_matrix_labelled().sum()) == 17


def test_system_matrix_is_field_multiplication():
    assert (tables.linear_matrix("system") == tables.linear_matrix("field")).all()
    with pytest.raises(ValueError):
        tables.linear_matrix("other")


def test_linear_layer_counts():
    c = divprop.linear_layer_counts(tables.linear_matrix("system"))
    assert c.patterns == 626
    assert c.invalid + c.valid == 626
    assert c.invalid == 78 and c.valid == 548
    assert divprop.linear_layer_counts(tables.linear_matrix("system"), balance=False).patterns >= 626


def test_surviving_patterns_are_valid_trails():
    M = tables.linear_matrix("system")
    pats = divprop.copy_xor_patterns(M)
    bad = set(divprop.linear_layer_counts(M).invalid_patterns)
    valid = {(u, v) for u in range(128) for v in tables.linear_table("system")[u]}
    assert set(pats) - bad == valid & set(pats)
    # every invertible-submatrix trail is representable by the copy/XOR system
    assert valid <= set(pats)


def test_inequalities_load():
    rows = tables.load_inequalities()
    assert len(rows) == 21
    assert all(len(r) == 15 for r in rows)
    # row 4 in label order: 6 x_6 - sum y >= -1
    assert rows[3] == (0, 0, 0, 0, 0, 0, 6, -1, -1, -1, -1, -1, -1, -1, -1)


def test_inequality_region_equals_minimal_wgp_pairs():
    extra, missing = tables.inequality_mismatches()
    assert extra == [] and missing == []
    assert len(tables.wgp_trail_table().minimal_pairs()) == 868


def test_corrupted_inequality_is_itemised(tmp_path):
    rows = tables.load_inequalities()
    rows[6] = rows[6][:14] + (rows[6][14] + 1,)
    extra, missing = tables.inequality_mismatches(rows)
    assert missing
    assert all(7 in failed for _, _, failed in missing)


def test_load_inequalities_rejects_short_rows(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        tables.load_inequalities(str(p))


def test_wgp_origin_and_full_output():
    rows = tables.load_inequalities()
    assert all(tables.inequality_holds(r, 0, 0) for r in rows)
    assert not tables.inequality_holds(rows[3], 0, 127)


def test_ksg_chain_covers_the_anf():
    terms = set(tables.KSG_AND_TERMS) | {(i,) for i in tables.KSG_XOR_TERM}
    assert terms == set(cipher.KSG_MONOMIALS)
    assert len(tables.KSG_AND_TERMS) == 46


def test_wgp_table_sbox_is_stage_coordinates():
    sb = tables.wgp_stage_sbox()
    for m in range(128):
        assert field.from_stage_bits(sb[m]) == cipher.wgp(field.from_stage_bits(m))
