import random
import sys
from pathlib import Path

import numpy as np
import pytest

from wg7cube import cipher, divprop, milp, tables, trail
from wg7cube.milp import builder

DATA = Path(__file__).parent / "data"


def _model_with_state(n=161):
    m = milp.MilpModel()
    return m, [m.add_var(f"s{i}") for i in range(n)]


def test_model_rejects_bad_constraints():
    m, S = _model_with_state(2)
    with pytest.raises(ValueError):
        m.add_constraint([(1, S[0]), (1, S[0])], ">=", 0)
    with pytest.raises(ValueError):
        m.add_constraint([(0, S[0])], ">=", 0)
    with pytest.raises(ValueError):
        m.add_constraint([(1, 99)], ">=", 0)
    with pytest.raises(ValueError):
        m.add_var("s0")


def test_linear_layer_adds_seventeen_t():
    m, S = _model_with_state(7)
    builder.build_linear_layer(m, S, "lin")
    assert sum(v.name.startswith("lin_t") for v in m.vars) == 17
    assert m.num_constraints() == 15


def _pattern_counts(matrix, cuts):
    """Enumerate every t assignment of one linear-layer gadget and check the model rows."""
    m, X = _model_with_state(7)
    Y = builder.build_linear_layer(m, X, "lin")
    if cuts:
        builder.add_invertibility_cuts(m, X, Y)
    tvars = [v.id for v in m.vars if v.name.startswith("lin_t")]
    n = m.num_vars()
    A = np.zeros((m.num_constraints(), n), dtype=np.int64)
    lo = np.full(m.num_constraints(), -10**9)
    hi = np.full(m.num_constraints(), 10**9)
    for r, con in enumerate(m.constraints):
        for c, v in con.terms:
            A[r, v] = c
        if con.sense in (">=", "="):
            lo[r] = con.rhs
        if con.sense in ("<=", "="):
            hi[r] = con.rhs
    # x and y follow from t through the equality rows; recover them by solving
    # each x/y row for its lone non-t variable
    T = ((np.arange(1 << len(tvars))[:, None] >> np.arange(len(tvars))) & 1)
    full = np.zeros((len(T), n), dtype=np.int64)
    full[:, tvars] = T
    for r, con in enumerate(m.constraints[:14]):
        (c0, v0), rest = con.terms[0], con.terms[1:]
        full[:, v0] = -sum(c * full[:, v] for c, v in rest) // c0
    vals = full @ A.T
    ok = np.all((vals >= lo) & (vals <= hi), axis=1) & np.all(full <= 1, axis=1)
    pats = set()
    for row in full[ok]:
        u = sum(int(row[X[p]]) << p for p in range(7))
        v = sum(int(row[Y[p]]) << p for p in range(7))
        pats.add((u, v))
    return pats


def test_linear_layer_relaxation_has_626_patterns():
    assert len(_pattern_counts("system", cuts=False)) == 626


def test_invertibility_cuts_leave_exactly_valid_patterns():
    pats = _pattern_counts("system", cuts=True)
    M = tables.linear_matrix("system")
    assert all(divprop.linear_trail_valid(M, u, v) for u, v in pats)
    assert len(pats) == 548


def test_identity_linear_layer_needs_no_cuts(monkeypatch):
    eye = np.eye(7, dtype=np.uint8)
    monkeypatch.setattr(tables, "linear_matrix", lambda kind="system": eye)
    monkeypatch.setattr(tables, "linear_counts", lambda kind="system": divprop.linear_layer_counts(eye))
    m, X = _model_with_state(7)
    Y = builder.build_linear_layer(m, X, "lin")
    assert sum(v.name.startswith("lin_t") for v in m.vars) == 7
    assert builder.add_invertibility_cuts(m, X, Y) == 0


def test_and_gadget_sizes_and_duplicates():
    m, S = _model_with_state()
    nv, nc = m.num_vars(), m.num_constraints()
    builder.build_and(m, S, (154, 155), "g")
    assert m.num_vars() - nv == 5 and m.num_constraints() - nc == 4
    with pytest.raises(ValueError):
        builder.build_and(m, S, (154, 154), "h")
    with pytest.raises(ValueError):
        builder.build_xor(m, S, (1, 1), "h")


@pytest.mark.parametrize("exact", [False, True])
def test_and_gadget_feasible_set(exact):
    m, S = _model_with_state(2)
    S2, y = builder.build_and(m, S, (0, 1), "g", exact=exact)
    seen = set()
    for a in range(1 << m.num_vars()):
        w = [(a >> i) & 1 for i in range(m.num_vars())]
        if m.check(w):
            xs = (w[S[0]] - w[S2[0]], w[S[1]] - w[S2[1]])
            seen.add((xs, w[y]))
    rule = {((a, b), out) for a in (0, 1) for b in (0, 1) for out in divprop.prop_and(a, b)}
    assert seen == (rule if exact else rule | {((0, 0), 1)})


def test_xor_gadget_is_equality():
    m, S = _model_with_state(2)
    S2, y = builder.build_xor(m, S, (0, 1), "g")
    for a in range(1 << m.num_vars()):
        w = [(a >> i) & 1 for i in range(m.num_vars())]
        if m.check(w):
            x0, x1 = w[S[0]] - w[S2[0]], w[S[1]] - w[S2[1]]
            assert w[y] == x0 + x1 and not (x0 and x1 and w[y])


def test_ksg_has_47_outputs():
    m, S = _model_with_state()
    builder.build_ksg(m, S)
    zrow = m.constraints[-1]
    assert len(zrow.terms) == 48
    assert sum(v.name.startswith("ksg_g46_x") for v in m.vars) == 4


def test_fbk_sizes():
    m, S = _model_with_state()
    nv = m.num_vars()
    builder.build_fbk(m, S, "f", cuts=False)
    names = [v.name for v in m.vars[nv:]]
    assert sum(n.startswith("f_z") for n in names) == 7
    assert sum(n.startswith(("f_sp", "f_x")) for n in names) == 28


def test_model_size_is_affine():
    fit = milp.round_count_fit(sizes=(1, 2, 3, 4, 5))
    assert fit["constraints"][0] == 78
    assert fit["vars"][0] == 87


def test_build_rejects_bad_cube():
    with pytest.raises(ValueError):
        milp.build_wg7_eval(1, (81,))
    with pytest.raises(ValueError):
        milp.build_wg7_eval(1, (3, 3))


def test_emit_lp_golden_and_deterministic():
    text = milp.emit_lp(milp.build_wg7_eval(1))
    assert text == milp.emit_lp(milp.build_wg7_eval(1))
    assert text == (DATA / "wg7_R1.lp").read_text()
    assert text.startswith("\\ wg7_R1\nMinimize\n") and text.endswith("Binary\n" + text.split("Binary\n")[1])
    assert text.rstrip().endswith("End")


def test_zero_division_property_is_infeasible():
    m = milp.build_wg7_eval(1, (), initial=0)
    for be in (milp.TrailBackend(), milp.ScipyBackend()):
        assert milp.solve(m, be).status is milp.Status.INFEASIBLE


def test_literal_and_gadget_makes_zero_vector_feasible():
    m = milp.build_wg7_eval(1, (), initial=0, exact_and=False)
    for be in (milp.TrailBackend(), milp.ScipyBackend()):
        assert milp.solve(m, be).feasible


def test_filter_reads_stage22_only():
    m = milp.build_wg7_eval(0, (0,), key_others="zero", key_bit=5)
    assert milp.solve(m, milp.ScipyBackend()).status is milp.Status.INFEASIBLE


def test_witness_replays_as_trail():
    m = milp.build_wg7_eval(4, (79, 80), 78)
    res = milp.solve(m, milp.ScipyBackend())
    assert res.feasible
    assert m.check(res.witness)
    assert trail.check_trail(res.trail)


def _solutions_next_state(k):
    m = milp.build_wg7_eval(1, initial=k, with_output=False)
    S1 = m.meta["states"][1]
    found = set()
    be = milp.ScipyBackend()
    while True:
        res = milp.solve(m, be)
        if not res.feasible:
            return found
        vec = sum(res.witness[v] << i for i, v in enumerate(S1))
        found.add(vec)
        ones = [S1[i] for i in range(161) if (vec >> i) & 1]
        terms = [(-1, v) for v in ones] + [(1, v) for v in S1 if v not in set(ones)]
        m.add_constraint(terms, ">=", 1 - len(ones))


@pytest.mark.parametrize("bits", [(0,), (154,), (0, 77), (1, 155, 160), (3, 80, 157)])
def test_one_round_successors_match_engine(bits):
    k = sum(1 << b for b in bits)
    assert _solutions_next_state(k) == trail.TrailEngine(budget=None).successors(k)


def test_backends_agree_on_random_queries():
    rng = random.Random(11)
    pool = list(range(70, 81))
    for _ in range(12):
        R = rng.randint(1, 5)
        cube = tuple(sorted(rng.sample(pool, rng.randint(1, 4))))
        k = rng.choice([None, rng.randrange(80)])
        m = milp.build_wg7_eval(R, cube, k)
        a = milp.solve(m, milp.TrailBackend()).status
        b = milp.solve(m, milp.ScipyBackend()).status
        assert a == b, (R, cube, k)


def test_paired_exactness_runs_agree():
    rng = random.Random(2)
    for _ in range(6):
        R = rng.randint(1, 6)
        cube = tuple(sorted(rng.sample(range(70, 81), 2)))
        a = milp.solve(milp.build_wg7_eval(R, cube, exact_and=True), milp.ScipyBackend()).status
        b = milp.solve(milp.build_wg7_eval(R, cube, exact_and=False), milp.ScipyBackend()).status
        assert a == b


def test_trail_backend_timeout_is_explicit():
    m = milp.build_wg7_eval(14, (0, 36, 37, 73, 74, 75, 76), 0)
    assert milp.solve(m, milp.TrailBackend(budget=5)).status is milp.Status.TIMEOUT


def test_missing_solver_is_unavailable_not_infeasible():
    be = milp.CommandBackend("no-such-solver-binary {lp} {sol}")
    with pytest.raises(milp.BackendUnavailable):
        be.solve(milp.build_wg7_eval(1))
    with pytest.raises(milp.BackendUnavailable):
        milp.backend_from_config("command")
    with pytest.raises(ValueError):
        milp.CommandBackend("cbc")


def test_command_timeout():
    be = milp.CommandBackend(f"{sys.executable} -c 'import time; time.sleep(5)' {{lp}}", timeout=0.2)
    assert be.solve(milp.build_wg7_eval(1)).status is milp.Status.TIMEOUT


def test_cbc_solution_parser():
    m = milp.build_wg7_eval(1)
    name = m.vars[3].name
    st, w = milp.backends.parse_cbc_solution(f"Optimal - objective value 0\n  0 {name} 1 0\n", m)
    assert st is milp.Status.FEASIBLE and w[3] == 1
    st, w = milp.backends.parse_cbc_solution("Infeasible - objective value 0\n", m)
    assert st is milp.Status.INFEASIBLE and w is None


CBC = milp.bundled_cbc()


@pytest.mark.skipif(CBC is None, reason="no CBC binary available")
def test_external_solver_on_r3_lp():
    be = milp.CommandBackend(f"{CBC} {{lp}} solve solu {{sol}}")
    for cube, k in [((78, 79, 80), None), ((0,), 3)]:
        m = milp.build_wg7_eval(3, cube, k)
        a = milp.solve(m, be)
        assert a.status == milp.solve(m, milp.TrailBackend()).status
        if a.feasible:
            assert trail.check_trail(a.trail)
