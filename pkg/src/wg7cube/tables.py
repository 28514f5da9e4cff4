"""WG-7 specific division-property data: the WGP trail table, the beta linear
layer (as a matrix and as the 17-term copy/XOR system), the 21 WGP
inequalities and the keystream monomial lists used by the KSG gadget chain.

Gadget variables x_i / y_i in the inequality set and the linear-layer system
are labelled high-to-low over stage coordinates: label i is coordinate 6 - i.
:func:`label_to_position` is the one place that mapping lives.
"""

from functools import lru_cache
from importlib import resources

import numpy as np

from . import cipher, divprop, field

LABELS_REVERSED = True


def label_to_position(i):
    return 6 - i if LABELS_REVERSED else i


def relabel(mask):
    """Convert a 7-bit mask between label order and coordinate order (an involution)."""
    return sum(((mask >> i) & 1) << label_to_position(i) for i in range(7))


# y_r = sum of x_c, in label order; 17 nonzero entries, one t variable each
BETA_SYSTEM = {
    0: (1, 3, 4),
    1: (2,),
    2: (2, 5),
    3: (4,),
    4: (1, 2),
    5: (6,),
    6: (0, 1, 2, 3, 4, 5, 6),
}


def beta_system_matrix_labelled():
    M = np.zeros((7, 7), dtype=np.uint8)
    for r, cols in BETA_SYSTEM.items():
        M[r, list(cols)] = 1
    return M


def linear_matrix(kind="system"):
    """Linear-layer matrix in stage coordinates.

    ``"system"`` is the 17-entry copy/XOR system relabelled to coordinates;
    ``"field"`` is multiplication by beta computed in the field.  With the
    stage basis in :mod:`wg7cube.field` the two coincide.
    """
    if kind == "system":
        L = beta_system_matrix_labelled()
        M = np.zeros_like(L)
        for r in range(7):
            for c in range(7):
                M[label_to_position(r), label_to_position(c)] = L[r, c]
        return M
    if kind == "field":
        return field.stage_matrix(field.BETA)
    raise ValueError(f"unknown matrix kind {kind!r}")


@lru_cache(maxsize=None)
def linear_table(kind="system"):
    return divprop.linear_trail_table(linear_matrix(kind))


@lru_cache(maxsize=None)
def linear_counts(kind="system"):
    return divprop.linear_layer_counts(linear_matrix(kind))


def wgp_stage_sbox():
    """WGP as a map on stage coordinates."""
    return tuple(field.stage_table(cipher.wgp))


@lru_cache(maxsize=None)
def wgp_trail_table():
    return divprop.sbox_trails(wgp_stage_sbox(), bits=7)


def load_inequalities(path=None):
    """Rows ``(a_0..a_6, b_0..b_6, rhs)`` in label order: sum a_i x_i + sum b_i y_i >= rhs."""
    if path is None:
        text = resources.files("wg7cube").joinpath("data/wgp_inequalities.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        vals = [int(t) for t in line.split()]
        if len(vals) != 15:
            raise ValueError(f"inequality row needs 15 integers, got {len(vals)}: {line!r}")
        rows.append(tuple(vals))
    return rows


def inequality_holds(row, u, v):
    """Evaluate one labelled inequality at coordinate-order masks (u, v)."""
    lu, lv = relabel(u), relabel(v)
    s = sum(row[i] * ((lu >> i) & 1) for i in range(7))
    s += sum(row[7 + i] * ((lv >> i) & 1) for i in range(7))
    return s >= row[14]


def inequality_region(rows=None):
    """All (u, v) in coordinate order that satisfy every inequality."""
    rows = load_inequalities() if rows is None else rows
    A = np.array([r[:14] for r in rows], dtype=np.int64)
    rhs = np.array([r[14] for r in rows], dtype=np.int64)
    pts = np.arange(1 << 14)
    # point bit i (i < 7) is label x_i, bit 7 + i is label y_i
    bits = ((pts[:, None] >> np.arange(14)[None, :]) & 1).astype(np.int64)
    ok = np.all(bits @ A.T >= rhs[None, :], axis=1)
    region = set()
    for p in np.flatnonzero(ok):
        p = int(p)
        region.add((relabel(p & 127), relabel(p >> 7)))
    return frozenset(region)


def inequality_mismatches(rows=None):
    """Itemised difference between the inequality region and the WGP minimal trail pairs.

    Returns ``(only_in_region, only_in_table)``; each entry also names the
    inequalities a table point violates.
    """
    rows = load_inequalities() if rows is None else rows
    region = inequality_region(rows)
    table = wgp_trail_table().minimal_pairs()
    extra = sorted(region - table)
    missing = []
    for u, v in sorted(table - region):
        failed = [k + 1 for k, r in enumerate(rows) if not inequality_holds(r, u, v)]
        missing.append((u, v, failed))
    return extra, missing


# KSG gadget chain: 46 AND terms then one XOR over the linear terms.
KSG_AND_TERMS = (
    (158, 160), (154, 155, 157, 158, 160), (158, 159), (154, 155, 157, 159),
    (157, 160), (154, 155, 158, 160), (157, 159), (154, 155, 159, 160),
    (157, 159, 160), (154, 156, 160), (157, 158), (156, 157, 159, 160),
    (157, 158, 160), (156, 158, 160), (157, 158, 159, 160), (154, 156, 158, 160),
    (156, 157), (155, 158, 159, 160), (156, 157, 158, 159, 160), (154, 157, 160),
    (155, 159), (155, 157, 159, 160), (155, 159, 160), (155, 156, 160),
    (155, 157, 158, 159, 160), (155, 156, 158), (155, 156, 157, 158), (154, 157, 159, 160),
    (154, 159), (154, 156, 157, 159), (154, 156), (154, 156, 158, 159, 160),
    (155, 156, 157, 160), (154, 159, 160), (154, 158, 159), (154, 157, 158, 159, 160),
    (154, 155), (154, 155, 158, 159, 160), (154, 155, 157, 158, 159), (154, 155, 156),
    (154, 156, 157, 158, 159), (154, 155, 156, 159), (154, 155, 156, 159, 160),
    (154, 155, 156, 157, 158), (154, 155, 156, 158, 159), (154, 155, 156, 157, 160),
)
KSG_XOR_TERM = (154, 155, 157, 160)


def ksg_monomial_masks():
    """Every filter monomial as a mask over stage-22 coordinates."""
    return tuple(sum(1 << (i - 154) for i in mono) for mono in cipher.KSG_MONOMIALS)
