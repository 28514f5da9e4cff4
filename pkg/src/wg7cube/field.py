"""Arithmetic in GF(2^7) = GF(2)[x]/(x^7 + x + 1).

Field elements are plain ints in ``range(128)``; bit ``i`` is the coefficient
of ``beta^i`` where ``beta`` is the class of ``x``.  Addition is XOR.

A cipher stage holds seven state bits ``(s_7j, ..., s_7j+6)``.  Those bits are
coordinates with respect to :data:`STAGE_BASIS`, not the polynomial basis.
All conversions between the two views go through :func:`from_stage_bits` and
:func:`to_stage_bits`, so swapping the basis constant is the only change needed
to try a different convention.
"""

from functools import reduce

import numpy as np

MODULUS = 0b10000011  # x^7 + x + 1
ORDER = 128
BETA = 0b10

# Stage position p (bit s_7j+p) is the field element STAGE_BASIS[p].
# With this basis the trace filter reproduces the published keystream ANF,
# multiplication by beta is the published 17-entry linear-layer matrix and
# the WGP division trail table is the region cut out by the 21 inequalities.
STAGE_BASIS = (97, 32, 12, 8, 33, 14, 113)


def mul_slow(a, b):
    """Shift-and-reduce product; the reference used to build the tables."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x80:
            a ^= MODULUS
    return r


def _build_log_tables():
    exp = [0] * 254
    log = [0] * ORDER
    e = 1
    for i in range(127):
        exp[i] = e
        log[e] = i
        e = mul_slow(e, BETA)
    exp[127:254] = exp[0:127]
    return exp, log


EXP, LOG = _build_log_tables()


def mul(a, b):
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def inv(a):
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(2^7)")
    return EXP[(127 - LOG[a]) % 127]


def power(a, e):
    """``a**e`` with ``power(0, 0) == 1``."""
    if e < 0:
        raise ValueError("negative exponent")
    if e == 0:
        return 1
    if a == 0:
        return 0
    return EXP[(LOG[a] * e) % 127]


def trace(a):
    """Absolute trace a + a^2 + ... + a^64, returned as 0 or 1."""
    t = 0
    x = a
    for _ in range(7):
        t ^= x
        x = mul(x, x)
    assert t in (0, 1)
    return t


# -- linear maps ------------------------------------------------------------

def mul_by_const_matrix(c):
    """7x7 GF(2) matrix of ``x -> c*x`` in the polynomial basis.

    Returned as a numpy uint8 array ``M`` with ``M[r, col]`` the coefficient of
    ``beta^r`` in ``c * beta^col``.
    """
    M = np.zeros((7, 7), dtype=np.uint8)
    for col in range(7):
        y = mul(c, 1 << col)
        for r in range(7):
            M[r, col] = (y >> r) & 1
    return M


def matvec(M, x):
    """Apply a 7x7 GF(2) matrix to the bit vector packed in int ``x``."""
    y = 0
    for r in range(M.shape[0]):
        acc = 0
        for col in range(M.shape[1]):
            if M[r, col] and (x >> col) & 1:
                acc ^= 1
        y |= acc << r
    return y


# -- stage coordinates ------------------------------------------------------

_FROM_STAGE = [
    reduce(lambda acc, p: acc ^ (STAGE_BASIS[p] if (m >> p) & 1 else 0), range(7), 0)
    for m in range(ORDER)
]
_TO_STAGE = [0] * ORDER
for _m, _e in enumerate(_FROM_STAGE):
    _TO_STAGE[_e] = _m
if sorted(_FROM_STAGE) != list(range(ORDER)):
    raise RuntimeError("STAGE_BASIS is not a basis of GF(2^7)")


def from_stage_bits(m):
    """Field element whose stage coordinates are packed in ``m`` (bit p = position p)."""
    return _FROM_STAGE[m]


def to_stage_bits(a):
    return _TO_STAGE[a]


def stage_matrix(c):
    """Matrix of ``x -> c*x`` acting on stage coordinates (bit p = position p)."""
    M = np.zeros((7, 7), dtype=np.uint8)
    for col in range(7):
        y = to_stage_bits(mul(c, from_stage_bits(1 << col)))
        for r in range(7):
            M[r, col] = (y >> r) & 1
    return M


def stage_table(func):
    """Tabulate a map on GF(2^7) as a 128-entry map on stage coordinates."""
    return [to_stage_bits(func(from_stage_bits(m))) for m in range(ORDER)]
