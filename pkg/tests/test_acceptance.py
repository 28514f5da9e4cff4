"""Acceptance suite: one recorded PASS/FAIL line per criterion.

The lines are printed in the ``acceptance`` section of the pytest summary.
Criteria 5 to 7 run the full reduced-round computations and take minutes.
"""

import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from wg7cube import cipher, cube, divprop, field, milp, tables, trail

I1 = cube.CUBES["I1"][0]


def test_criterion_1_filter_equivalence(verdict):
    t0 = time.perf_counter()
    bad = []
    for m in range(128):
        s = [(m >> p) & 1 for p in range(7)]
        if field.trace(cipher.wgp(field.from_stage_bits(m))) != cipher.ksg_anf(s):
            bad.append(m)
    bijective = sorted(cipher.WGP_TABLE) == list(range(128))
    dt = time.perf_counter() - t0
    ok = not bad and bijective and dt < 1
    verdict(1, ok, f"{128 - len(bad)}/128 filter values agree, bijective={bijective}, {dt:.2f} s")
    assert ok


def test_criterion_2_linear_layer_counts(verdict):
    t0 = time.perf_counter()
    c = divprop.linear_layer_counts(tables.linear_matrix("system"))
    dt = time.perf_counter() - t0
    ok = (c.patterns, c.invalid, c.valid) == (626, 76, 550) and dt < 1
    verdict(2, ok, f"{c.patterns} solutions, {c.invalid} invalid, {c.valid} valid "
                   f"(expected 626/76/550), {dt:.2f} s")
    assert ok


def test_criterion_3_inequality_characterisation(verdict):
    t0 = time.perf_counter()
    extra, missing = tables.inequality_mismatches()
    table = tables.wgp_trail_table()
    region = tables.inequality_region()
    dt = time.perf_counter() - t0
    unsound = len(region - table.valid_pairs)
    ok = not extra and not missing and not unsound and dt < 5
    verdict(3, ok, f"region {len(region)} points vs {len(table.minimal_pairs())} minimal pairs: "
                   f"{len(extra) + len(missing)} mismatches; {unsound} invalid points admitted; "
                   f"{len(table.valid_pairs - region)} non-minimal valid pairs left out; {dt:.2f} s")
    assert ok


def test_criterion_4_model_size(verdict):
    t0 = time.perf_counter()
    fit = milp.round_count_fit(sizes=range(1, 21))
    dt = time.perf_counter() - t0
    pv, pc = milp.REFERENCE_SIZE["vars"], milp.REFERENCE_SIZE["constraints"]
    (av, bv), (ac, bc) = fit["vars"], fit["constraints"]
    ok = dt < 10
    verdict(4, ok, f"affine for R=1..20: vars {av}R+{bv} (published {pv[0]}R+{pv[1]}, "
                   f"delta {av - pv[0]}R{bv - pv[1]:+d}), constraints {ac}R+{bc} "
                   f"(published {pc[0]}R+{pc[1]}, delta {ac - pc[0]}R{bc - pc[1]:+d}), {dt:.2f} s")
    assert ok


def test_criterion_5_involved_key_rows(verdict):
    lines, ok = [], True
    for name in ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8"):
        I, R = cube.CUBES[name]
        t0 = time.perf_counter()
        try:
            got = trail.format_indices(trail.involved_keys(R, I, budget=trail.DEFAULT_BUDGET))
        except trail.BudgetExceeded:
            got = "budget-exceeded"
        dt = time.perf_counter() - t0
        match = got == cube.REFERENCE_J[name]
        if R <= 16 or got != "budget-exceeded":
            ok &= match
        lines.append(f"{name}/R{R} {'ok' if match else got} {dt:.0f}s")
    verdict(5, ok, "; ".join(lines))
    assert ok


def test_criterion_6_soundness(verdict):
    t0 = time.perf_counter()
    viol, sizes = {}, []
    for R in (8, 10, 12, 14):
        spec = cube.CubeSpec.make(I1, R)
        emp = cube.empirical_dependence(spec, 64, seed=R)
        J = set(trail.involved_keys(R, I1))
        sizes.append(f"R{R} {len(emp)}/{len(J)}")
        if emp - J:
            viol[R] = sorted(emp - J)
    dt = time.perf_counter() - t0
    ok = not viol and dt < 1800
    verdict(6, ok, f"empirical/involved {', '.join(sizes)}; violations {viol or 0}; {dt:.0f} s")
    assert ok


def test_criterion_7_headline_run(verdict, tmp_path):
    t0 = time.perf_counter()
    spec = cube.named_cube("I1")
    J = trail.involved_keys(spec.R, spec.I)
    ck = str(tmp_path / "I1.npz")
    spec, attempts, prof = cube.screen_iv(spec, J, trials=4, seed=0, checkpoint=ck)
    # resuming from the finished checkpoint must reproduce the table
    again = cube.superpoly_table(spec, J, checkpoint=ck)
    resumable = bool((again.table == prof.table).all())
    rng = np.random.default_rng(2024)
    bits, survived = [], True
    for _ in range(32):
        key = tuple(int(b) for b in rng.integers(0, 2, 80))
        res = cube.online_recover(key, [(spec, prof)])
        survived &= res.true_key_survives
        bits.append(res.bits_recovered)
    dt = time.perf_counter() - t0
    exact = all(math.isclose(b, 1.0, rel_tol=0, abs_tol=1e-12) for b in bits)
    ok = len(prof.table) == 1 << len(J) and resumable and survived and exact
    verdict(7, ok, f"|J|={len(J)}, 2^{len(J) + len(spec.I)} evaluations, {attempts} IV draw(s), "
                   f"ones {prof.ones_count}/{len(prof.table)} ({prof.verdict}), bits removed "
                   f"{min(bits):.4f}..{max(bits):.4f}, true key kept={survived}, "
                   f"resumable={resumable}, {dt:.0f} s")
    assert ok


def test_criterion_8_complexity(verdict):
    rows = cube.reference_rows()
    rep = cube.complexity_report(rows)
    full = cube.complexity_report(cube.twenty_round_rows())
    exps = [r.log2_time for r in rows]
    table = rep.format_table()
    ok = (exps == [27, 35, 41, 49, 55, 63, 69, 69] and "2^(20+7)" in table
          and (full.log2_time, full.log2_data) == (73.0, 10.0))
    verdict(8, ok, f"row exponents {exps}; listed rows 2^{rep.log2_time:.2f}/2^{rep.log2_data:.0f}; "
                   f"eight cubes at 20 rounds 2^{full.log2_time:.2f} time / 2^{full.log2_data:.2f} data")
    assert ok


CBC = milp.bundled_cbc()


@pytest.mark.skipif(CBC is None, reason="no external solver configured")
def test_criterion_9_engine_equivalence(verdict):
    golden = (Path(__file__).parent / "data" / "wg7_R1.lp").read_text()
    stable = milp.emit_lp(milp.build_wg7_eval(1)) == golden
    be = milp.CommandBackend(f"{CBC} {{lp}} solve solu {{sol}}")
    # random candidates are mostly infeasible; keep 25 of each verdict so both
    # outcomes are exercised (the external solver decides independently)
    rng = random.Random(9)
    want = {milp.Status.FEASIBLE: 25, milp.Status.INFEASIBLE: 25}
    disagree, asked = [], 0
    while any(want.values()):
        R = rng.randint(0, 6)
        if rng.random() < 0.5:
            I = tuple(sorted(rng.sample(range(60, 81), rng.randint(1, 5))))
            m = milp.build_wg7_eval(R, I, rng.choice([None, rng.randrange(80)]))
        else:
            bits = rng.sample(range(154 - 7 * R, 161), rng.randint(1, 3))
            m = milp.build_wg7_eval(R, initial=sum(1 << b for b in bits))
        a = milp.solve(m, milp.TrailBackend()).status
        if not want[a]:
            continue
        want[a] -= 1
        asked += 1
        b = milp.solve(m, be).status
        if a != b:
            disagree.append((m.name, a.value, b.value))
    ok = stable and not disagree
    verdict(9, ok, f"{asked} queries (25 feasible, 25 infeasible), {len(disagree)} disagreements; "
                   f"R=1 LP byte-stable={stable}")
    assert ok, disagree
