"""Conventional bit-based division property.

Division vectors are ints used as bitmasks (bit i = exponent of variable i);
a K-set is any iterable of them.  ``a <= b`` componentwise is ``a & b == a``.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np


def weight(v):
    return bin(v).count("1")


def dominates(a, b):
    """True if a >= b componentwise."""
    return a & b == b


def submasks(m):
    """All submasks of ``m``, from ``m`` down to 0."""
    s = m
    while True:
        yield s
        if s == 0:
            return
        s = (s - 1) & m


def reduce(ks):
    """Keep the minimal vectors of a K-set (any vector dominating another is redundant)."""
    keep = []
    for v in sorted(set(ks), key=weight):
        if not any(v & k == k for k in keep):
            keep.append(v)
    return frozenset(keep)


# -- primitive rules --------------------------------------------------------

def prop_copy(a):
    return {(0, 0)} if a == 0 else {(1, 0), (0, 1)}


def prop_xor(a1, a2):
    s = a1 + a2
    return {s} if s <= 1 else set()


def prop_and(a1, a2):
    return {0} if a1 == 0 and a2 == 0 else {1}


# -- ANF --------------------------------------------------------------------

def mobius(truth_table):
    """ANF coefficients of a Boolean function given by its truth table.

    Works on the last axis, so a 2-D array transforms many functions at once.
    """
    a = np.array(truth_table, dtype=np.uint8) & 1
    n = a.shape[-1]
    if n & (n - 1):
        raise ValueError("truth table length must be a power of two")
    step = 1
    while step < n:
        v = a.reshape(a.shape[:-1] + (n // (2 * step), 2, step))
        v[..., 1, :] ^= v[..., 0, :]
        step *= 2
    return a


def anf_monomials(truth_table):
    return [int(m) for m in np.flatnonzero(mobius(truth_table))]


# -- S-box trails -----------------------------------------------------------

@dataclass(frozen=True)
class SboxTrailTable:
    sbox: tuple
    bits: int
    valid_pairs: frozenset   # (u, v): ANF of pi_v(S(x)) has a monomial x^w with w >= u
    minimal_map: tuple       # u -> sorted minimal v's

    def minimal_pairs(self):
        return frozenset((u, v) for u, vs in enumerate(self.minimal_map) for v in vs)

    def export_text(self):
        width = (self.bits + 3) // 4
        lines = []
        for u, vs in enumerate(self.minimal_map):
            lines.append("%0*x: %s" % (width, u, " ".join("%0*x" % (width, v) for v in vs)))
        return "\n".join(lines) + "\n"


def sbox_trails(sbox, bits=7):
    size = 1 << bits
    sbox = tuple(int(y) for y in sbox)
    if len(sbox) != size:
        raise ValueError(f"S-box table must have {size} entries, got {len(sbox)}")
    xs = np.arange(size)
    out = np.array(sbox)
    # truth tables of pi_v(S(x)) for every v, then one batched Mobius transform
    tables = ((out[None, :] & xs[:, None]) == xs[:, None]).astype(np.uint8)
    anf = mobius(tables)
    valid = set()
    for v in range(size):
        mons = np.flatnonzero(anf[v])
        # u is covered iff some monomial w has w & u == u
        covered = np.zeros(size, dtype=bool)
        for w in mons:
            covered |= (xs & w) == xs
        for u in np.flatnonzero(covered):
            valid.add((int(u), v))
    minimal = []
    for u in range(size):
        vs = reduce(v for (uu, v) in valid if uu == u)
        minimal.append(tuple(sorted(vs)))
    return SboxTrailTable(sbox, bits, frozenset(valid), tuple(minimal))


# -- linear layers ----------------------------------------------------------

def gf2_rank(rows):
    """Rank over GF(2) of row vectors packed as ints."""
    rows = [r for r in rows if r]
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
        rows = [r for r in rows if r]
    return rank


def _as_matrix(M):
    return np.asarray(M, dtype=np.uint8) & 1


def submatrix_rows(M, u, v):
    """Rows ``support(v)`` of M restricted to columns ``support(u)``, packed as ints."""
    M = _as_matrix(M)
    cols = [c for c in range(M.shape[1]) if (u >> c) & 1]
    rows = []
    for r in range(M.shape[0]):
        if (v >> r) & 1:
            rows.append(sum(int(M[r, c]) << k for k, c in enumerate(cols)))
    return rows


def linear_trail_valid(M, u, v):
    """Division trail u -> v through y = M x: equal weights and an invertible submatrix."""
    if weight(u) != weight(v):
        return False
    return gf2_rank(submatrix_rows(M, u, v)) == weight(u)


def linear_trail_table(M):
    M = _as_matrix(M)
    n = M.shape[1]
    return tuple(tuple(v for v in range(1 << M.shape[0]) if linear_trail_valid(M, u, v))
                 for u in range(1 << n))


def copy_xor_patterns(M, balance=True):
    """(u, v) patterns admitted by the copy/XOR system of a linear layer.

    One binary t per nonzero entry M[r, c]; x_c is the sum of its column's t's
    and y_r the sum of its row's t's, every x and y binary.  With ``balance``
    the row sum(y) = sum(x) is also imposed.  Returns a dict pattern -> number
    of t assignments producing it.
    """
    M = _as_matrix(M)
    entries = [(r, c) for r in range(M.shape[0]) for c in range(M.shape[1]) if M[r, c]]
    counts = {}
    for ts in product((0, 1), repeat=len(entries)):
        x = [0] * M.shape[1]
        y = [0] * M.shape[0]
        for (r, c), t in zip(entries, ts):
            x[c] += t
            y[r] += t
        if max(x, default=0) > 1 or max(y, default=0) > 1:
            continue
        if balance and sum(x) != sum(y):
            continue
        u = sum(b << i for i, b in enumerate(x))
        v = sum(b << i for i, b in enumerate(y))
        counts[(u, v)] = counts.get((u, v), 0) + 1
    return counts


@dataclass(frozen=True)
class LinearLayerCounts:
    patterns: int
    invalid: int
    valid: int
    invalid_patterns: tuple


def linear_layer_counts(M, balance=True):
    pats = copy_xor_patterns(M, balance=balance)
    bad = tuple(sorted(p for p in pats if not linear_trail_valid(M, *p)))
    return LinearLayerCounts(len(pats), len(bad), len(pats) - len(bad), bad)
