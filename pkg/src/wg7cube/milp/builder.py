"""MILP description of division trails through reduced-round WG-7.

Gadgets follow the copy / AND / XOR / linear-layer / S-box modelling used for
cube attacks.  A state is a list of 161 variable ids (``S[i]`` is the division
property of ``s_i``); every gadget returns a new list and leaves the consumed
entries replaced by their copy residue.

Variable names are deterministic: ``s0_b{i}`` for the initial state,
``r{r}_...`` inside round ``r`` and ``ksg_...`` for the output chain.
"""

from .. import cipher, tables
from .model import MilpModel

TAG_CORE = "core"
TAG_INITIAL = "initial"
TAG_CUT = "invertibility"
TAG_EXACT = "exactness"


def _copy(model, S, idx, prefix, var=("sp", "x")):
    """s_i = s'_i + x_i for i in idx; returns (S', {i: x_i})."""
    S = list(S)
    xs = {}
    for i in idx:
        sp = model.add_var(f"{prefix}_{var[0]}{i}")
        x = model.add_var(f"{prefix}_{var[1]}{i}")
        model.add_constraint([(1, S[i]), (-1, sp), (-1, x)], "=", 0)
        S[i] = sp
        xs[i] = x
    return S, xs


def build_and(model, S, idx, prefix, exact=False):
    """AND gadget: y >= x_i for every consumed bit.

    The bound alone admits y = 1 with every x_i = 0; ``exact`` adds
    y <= sum x_i so the output is live only when some input is.
    """
    if len(set(idx)) != len(idx):
        raise ValueError(f"AND gadget indices repeat: {idx}")
    if not idx:
        raise ValueError("AND gadget needs at least one input")
    S, xs = _copy(model, S, idx, prefix)
    y = model.add_var(f"{prefix}_y")
    for i in idx:
        model.add_constraint([(1, y), (-1, xs[i])], ">=", 0)
    if exact:
        model.add_constraint([(1, y)] + [(-1, xs[i]) for i in idx], "<=", 0, TAG_EXACT)
    return S, y


def build_xor(model, S, idx, prefix):
    """XOR gadget: y = sum x_i."""
    if len(set(idx)) != len(idx):
        raise ValueError(f"XOR gadget indices repeat: {idx}")
    S, xs = _copy(model, S, idx, prefix)
    y = model.add_var(f"{prefix}_y")
    model.add_constraint([(1, y)] + [(-1, xs[i]) for i in idx], "=", 0)
    return S, y


def _labelled(matrix):
    M = tables.linear_matrix(matrix)
    pos = tables.label_to_position
    return [[int(M[pos(r), pos(c)]) for c in range(7)] for r in range(7)]


def build_linear_layer(model, X, prefix, matrix="system"):
    """Copy/XOR system for y = beta * x on 7 coordinates.

    ``X`` holds x-variable ids in coordinate order; the returned list does too.
    Internally the system runs in label order (one t per nonzero matrix entry)
    and closes with sum y = sum x.
    """
    M = _labelled(matrix)
    pos = tables.label_to_position
    XL = [X[pos(i)] for i in range(7)]
    YL = [model.add_var(f"{prefix}_y{pos(j)}") for j in range(7)]
    t = {}
    for r in range(7):
        for c in range(7):
            if M[r][c]:
                t[r, c] = model.add_var(f"{prefix}_t{r}_{c}")
    for i in range(7):
        col = [t[r, i] for r in range(7) if (r, i) in t]
        model.add_constraint([(1, XL[i])] + [(-1, v) for v in col], "=", 0)
        row = [t[i, c] for c in range(7) if (i, c) in t]
        model.add_constraint([(1, YL[i])] + [(-1, v) for v in row], "=", 0)
    model.add_constraint([(1, y) for y in YL] + [(-1, x) for x in XL], "=", 0)
    return [YL[tables.label_to_position(p)] for p in range(7)]


def add_invertibility_cuts(model, X, Y, matrix="system"):
    """No-good cuts removing every copy/XOR pattern whose submatrix is singular.

    ``X`` and ``Y`` are coordinate-order variable lists of one linear layer.
    Returns the number of cuts added.
    """
    bad = tables.linear_counts(matrix).invalid_patterns
    for u, v in bad:
        terms, ones = [], 0
        for vars_, mask in ((X, u), (Y, v)):
            for p in range(7):
                if (mask >> p) & 1:
                    terms.append((-1, vars_[p]))
                    ones += 1
                else:
                    terms.append((1, vars_[p]))
        model.add_constraint(terms, ">=", 1 - ones, TAG_CUT)
    return len(bad)


def build_wgp(model, S, prefix, rows=None):
    """Copy stage 22 and bound (x, y) by the WGP inequalities.

    Returns (S', Y) with Y in coordinate order.  Inequality rows are in label
    order and are mapped to coordinates here.
    """
    rows = tables.load_inequalities() if rows is None else rows
    S = list(S)
    X, Y = [], []
    for p in range(7):
        i = 154 + p
        sp = model.add_var(f"{prefix}_sp{i}")
        x = model.add_var(f"{prefix}_x{p}")
        y = model.add_var(f"{prefix}_y{p}")
        X.append(x)
        Y.append(y)
        model.add_constraint([(1, S[i]), (-1, sp), (-1, x)], "=", 0)
        S[i] = sp
    pos = tables.label_to_position
    for row in rows:
        terms = []
        for i in range(7):
            if row[i]:
                terms.append((row[i], X[pos(i)]))
            if row[7 + i]:
                terms.append((row[7 + i], Y[pos(i)]))
        model.add_constraint(terms, ">=", row[14])
    return S, Y


def build_fbk(model, S, prefix, matrix="system", cuts=True):
    """Linear feedback: z = beta * s_0-stage + s_11-stage, with copies."""
    S = list(S)
    Z = [model.add_var(f"{prefix}_z{p}") for p in range(7)]
    S, xs = _copy(model, S, list(range(7)) + list(range(77, 84)), prefix)
    X0 = [xs[p] for p in range(7)]
    Y = build_linear_layer(model, X0, prefix + "_lin", matrix)
    if cuts:
        add_invertibility_cuts(model, X0, Y, matrix)
    for p in range(7):
        model.add_constraint([(1, Z[p]), (-1, Y[p]), (-1, xs[77 + p])], "=", 0)
    return S, Z


def build_round(model, S, r, matrix="system", cuts=True, rows=None):
    """One initialization round; returns the next state's variable list."""
    S, A = build_wgp(model, S, f"r{r}_wgp", rows)
    S, B = build_fbk(model, S, f"r{r}_fbk", matrix, cuts)
    for p in range(7):
        model.add_constraint([(1, S[p])], "=", 0)
    new = [model.add_var(f"r{r}_s22_{p}") for p in range(7)]
    for p in range(7):
        model.add_constraint([(1, new[p]), (-1, A[p]), (-1, B[p])], "=", 0)
    return S[7:] + new


def build_ksg(model, S, exact=False):
    """Output chain: 46 AND gadgets, one XOR gadget, z = sum of their outputs.

    Returns (S_residual, z).
    """
    z = model.add_var("ksg_z")
    outs = []
    for g, idx in enumerate(tables.KSG_AND_TERMS):
        S, y = build_and(model, S, idx, f"ksg_g{g}", exact=exact)
        outs.append(y)
    S, y = build_xor(model, S, tables.KSG_XOR_TERM, f"ksg_g{len(outs)}")
    outs.append(y)
    model.add_constraint([(1, z)] + [(-1, a) for a in outs], "=", 0)
    return S, z


def initial_state(model, cube=(), key_bit=None, key_others="zero", initial=None):
    """Declare ``s0_b*`` and fix the starting division property.

    Cube IV bits are 1, other IV bits 0.  ``key_bit`` is 1; other key bits are 0
    (``key_others="zero"``) or unconstrained (``"free"``).  With ``key_bit`` None
    every key bit is unconstrained.  ``initial`` (a 161-bit int) instead fixes
    every bit.
    """
    if key_others not in ("zero", "free"):
        raise ValueError("key_others must be 'zero' or 'free'")
    for i in cube:
        if not 0 <= i < cipher.IV_BITS:
            raise ValueError(f"cube index {i} outside 0..80")
    if len(set(cube)) != len(cube):
        raise ValueError("cube indices repeat")
    if key_bit is not None and not 0 <= key_bit < cipher.KEY_BITS:
        raise ValueError(f"key bit {key_bit} outside 0..79")
    S = [model.add_var(f"s0_b{i}") for i in range(cipher.STATE_BITS)]
    if initial is not None:
        for i in range(cipher.STATE_BITS):
            model.add_constraint([(1, S[i])], "=", (initial >> i) & 1, TAG_INITIAL)
        return S
    cube_pos = {cipher.iv_bit_position(i) for i in cube}
    for i in range(cipher.IV_BITS):
        p = cipher.iv_bit_position(i)
        model.add_constraint([(1, S[p])], "=", int(p in cube_pos), TAG_INITIAL)
    for j in range(cipher.KEY_BITS):
        p = cipher.key_bit_position(j)
        if j == key_bit:
            model.add_constraint([(1, S[p])], "=", 1, TAG_INITIAL)
        elif key_bit is not None and key_others == "zero":
            model.add_constraint([(1, S[p])], "=", 0, TAG_INITIAL)
    return S


def build_wg7_eval(rounds, cube=(), key_bit=None, key_others="zero", exact_and=True,
                   matrix="system", cuts=True, initial=None, with_output=True):
    """Feasibility model: does a division trail reach z = 1 after ``rounds``?

    Returns a :class:`MilpModel` whose ``meta`` records the build parameters and
    the state variable lists per round (``meta["states"]``).
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    name = f"wg7_R{rounds}"
    if key_bit is not None:
        name += f"_k{key_bit}"
    model = MilpModel(name=name)
    model.meta.update(rounds=rounds, cube=tuple(cube), key_bit=key_bit,
                      key_others=key_others, exact_and=exact_and, matrix=matrix,
                      cuts=cuts, initial=initial, with_output=with_output)
    S = initial_state(model, cube, key_bit, key_others, initial)
    states = [list(S)]
    for r in range(1, rounds + 1):
        S = build_round(model, S, r, matrix, cuts)
        states.append(list(S))
    model.meta["states"] = states
    if with_output:
        S, z = build_ksg(model, S, exact=exact_and)
        for v in S:
            model.add_constraint([(1, v)], "=", 0)
        model.add_constraint([(1, z)], "=", 1)
        model.meta["z"] = z
    return model


REFERENCE_SIZE = {"vars": (73, 532), "constraints": (78, 584)}


def literal_model(rounds, cube=(), key_bit=None):
    """The gadgets exactly as written: no invertibility cuts, no AND exactness rows."""
    return build_wg7_eval(rounds, cube, key_bit, exact_and=False, cuts=False)


def model_size(model):
    """(variables, constraints): every binary declaration and every added row."""
    return model.num_vars(), model.num_constraints()


def round_count_fit(sizes=tuple(range(1, 21)), build=literal_model):
    """Fit variables and constraints as ``a * R + b``; raises if any size is off the line."""
    pts = []
    for R in sizes:
        pts.append((R,) + model_size(build(R)))
    (r0, v0, c0), (r1, v1, c1) = pts[0], pts[-1]
    dv = (v1 - v0) // (r1 - r0)
    dc = (c1 - c0) // (r1 - r0)
    fit = {"vars": (dv, v0 - dv * r0), "constraints": (dc, c0 - dc * r0)}
    for R, v, c in pts:
        if v != dv * R + fit["vars"][1] or c != dc * R + fit["constraints"][1]:
            raise AssertionError("model size is not affine in the round count")
    return fit
