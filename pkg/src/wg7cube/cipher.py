"""Bit-exact WG-7 with a configurable number of initialization rounds.

State: 23 stages of GF(2^7), kept as field elements (polynomial basis ints).
The bit view ``s_0 .. s_160`` has ``s_{7j+p}`` = stage coordinate ``p`` of
stage ``j`` (see :mod:`wg7cube.field` for the coordinate basis).

Scalar functions here are the reference; :class:`BatchCipher` evaluates many
(key, IV) pairs at once with numpy and is what the cube pipeline uses.
"""

from dataclasses import dataclass

import numpy as np

from . import field

KEY_BITS = 80
IV_BITS = 81
STAGES = 23
STATE_BITS = 161
FULL_INIT_ROUNDS = 46

# Keystream filter ANF over (s_154, ..., s_160), in published order.
KSG_MONOMIALS = (
    (160,), (158, 160), (158, 159), (157,), (157, 160),
    (157, 159), (157, 159, 160), (157, 158), (157, 158, 160), (157, 158, 159, 160),
    (156, 158, 160), (156, 157), (156, 157, 159, 160), (156, 157, 158, 159, 160), (155,),
    (155, 159), (155, 159, 160), (155, 156, 158), (154, 155), (155, 156, 160),
    (155, 158, 159, 160), (155, 157, 159, 160), (155, 157, 158, 159, 160), (155, 156, 157, 160),
    (155, 156, 157, 158),
    (154,), (154, 159), (154, 159, 160), (154, 156), (154, 158, 159),
    (154, 157, 160), (154, 157, 159, 160), (154, 157, 158, 159, 160), (154, 156, 160),
    (154, 156, 158, 160),
    (154, 156, 158, 159, 160), (154, 156, 157, 159), (154, 156, 157, 158, 159),
    (154, 155, 159, 160), (154, 155, 158, 160),
    (154, 155, 156), (154, 155, 158, 159, 160), (154, 155, 157, 159), (154, 155, 157, 158, 160),
    (154, 155, 157, 158, 159),
    (154, 155, 156, 159), (154, 155, 156, 159, 160), (154, 155, 156, 158, 159),
    (154, 155, 156, 157, 160), (154, 155, 156, 157, 158),
)


class InputError(ValueError):
    """Malformed key or IV; ``position`` is the index of the first bad character."""

    def __init__(self, msg, position=None):
        super().__init__(msg)
        self.position = position


# -- the WG permutation -----------------------------------------------------

def wg_permutation(y):
    """WGP_7(y) = y + (y+1)^33 + (y+1)^39 + (y+1)^41 + (y+1)^104."""
    t = y ^ 1
    return y ^ field.power(t, 33) ^ field.power(t, 39) ^ field.power(t, 41) ^ field.power(t, 104)


def wgp(x):
    """Nonlinear feedback S-box: the WG permutation applied to the decimated input x^3.

    Its trace is Tr(x^3 + x^9 + x^21 + x^57 + x^87), the keystream filter.
    """
    return wg_permutation(field.power(x, 3))


def trace_polynomial(x):
    """x^3 + x^9 + x^21 + x^57 + x^87 (same trace as :func:`wgp`, but not a permutation)."""
    p = field.power
    return p(x, 3) ^ p(x, 9) ^ p(x, 21) ^ p(x, 57) ^ p(x, 87)


WGP_TABLE = tuple(wgp(x) for x in range(128))
FILTER_TABLE = tuple(field.trace(v) for v in WGP_TABLE)
MUL_BETA_TABLE = tuple(field.mul(field.BETA, x) for x in range(128))


def ksg_anf(s):
    """Evaluate the published filter ANF on ``s = (s_154, ..., s_160)``."""
    if len(s) != 7:
        raise ValueError("filter input must have 7 bits")
    z = 0
    for mono in KSG_MONOMIALS:
        z ^= all(s[i - 154] for i in mono)
    return int(z)


# -- keys, IVs, loading -----------------------------------------------------

def parse_key(text):
    """80-bit key from 20 hex characters; K_0 is the MSB of the first character."""
    text = text.strip()
    for i, ch in enumerate(text):
        if ch not in "0123456789abcdefABCDEF":
            raise InputError(f"invalid hex character {ch!r} at position {i}", i)
    if len(text) != 20:
        raise InputError(f"key must be 20 hex characters, got {len(text)}", min(len(text), 20))
    value = int(text, 16)
    return tuple((value >> (79 - i)) & 1 for i in range(80))


def format_key(key):
    return "".join("%x" % int("".join(map(str, key[i:i + 4])), 2) for i in range(0, 80, 4))


def parse_iv(text):
    """81-bit IV from an 81-character binary string, IV_0 first."""
    text = text.strip()
    for i, ch in enumerate(text):
        if ch not in "01":
            raise InputError(f"invalid binary character {ch!r} at position {i}", i)
    if len(text) != 81:
        raise InputError(f"IV must be 81 binary characters, got {len(text)}", min(len(text), 81))
    return tuple(int(ch) for ch in text)


def format_iv(iv):
    return "".join(map(str, iv))


def key_bit_position(i):
    """State bit index that key bit K_i is loaded into."""
    if not 0 <= i < KEY_BITS:
        raise IndexError(i)
    if i >= 77:
        return 154 + (i - 77)
    q, r = divmod(i, 7)
    return 7 * (2 * q) + r if r < 4 else 7 * (2 * q + 1) + (r - 4)


def iv_bit_position(i):
    """State bit index that IV bit IV_i is loaded into."""
    if not 0 <= i < IV_BITS:
        raise IndexError(i)
    if i >= 77:
        return 157 + (i - 77)
    q, r = divmod(i, 7)
    return 7 * (2 * q) + 4 + r if r < 3 else 7 * (2 * q + 1) + r


@dataclass(frozen=True)
class CipherState:
    stages: tuple

    def __post_init__(self):
        if len(self.stages) != STAGES:
            raise ValueError("a WG-7 state has 23 stages")

    def bits(self):
        out = []
        for e in self.stages:
            m = field.to_stage_bits(e)
            out.extend((m >> p) & 1 for p in range(7))
        return tuple(out)

    @classmethod
    def from_bits(cls, bits):
        if len(bits) != STATE_BITS:
            raise ValueError("a WG-7 state has 161 bits")
        stages = []
        for j in range(STAGES):
            m = sum(bits[7 * j + p] << p for p in range(7))
            stages.append(field.from_stage_bits(m))
        return cls(tuple(stages))


def load(key, iv):
    if len(key) != KEY_BITS:
        raise InputError(f"key must have 80 bits, got {len(key)}")
    if len(iv) != IV_BITS:
        raise InputError(f"IV must have 81 bits, got {len(iv)}")
    bits = [0] * STATE_BITS
    for i, b in enumerate(key):
        bits[key_bit_position(i)] = int(b)
    for i, b in enumerate(iv):
        bits[iv_bit_position(i)] = int(b)
    return CipherState.from_bits(bits)


def init_round(st):
    s = st.stages
    new = s[11] ^ field.mul(field.BETA, s[0]) ^ wgp(s[22])
    return CipherState(s[1:] + (new,))


def ksg_round(st):
    """Emit the filter bit of the current state, then clock with linear feedback."""
    s = st.stages
    z = field.trace(wgp(s[22]))
    new = s[11] ^ field.mul(field.BETA, s[0])
    return CipherState(s[1:] + (new,)), z


def keystream(key, iv, init_rounds=FULL_INIT_ROUNDS, n=1):
    if init_rounds < 0 or n < 1:
        raise ValueError("need init_rounds >= 0 and n >= 1")
    st = load(key, iv)
    for _ in range(init_rounds):
        st = init_round(st)
    out = []
    for _ in range(n):
        st, z = ksg_round(st)
        out.append(z)
    return out


def state_digest(st):
    return "".join("%02x" % e for e in st.stages)


# -- vectorised evaluation ---------------------------------------------------

_WGP = np.array(WGP_TABLE, dtype=np.uint8)
_FILTER = np.array(FILTER_TABLE, dtype=np.uint8)
_MULB = np.array(MUL_BETA_TABLE, dtype=np.uint8)


def _bit_contribution(pos):
    stage, p = divmod(pos, 7)
    return stage, field.from_stage_bits(1 << p)


KEY_CONTRIB = tuple(_bit_contribution(key_bit_position(i)) for i in range(KEY_BITS))
IV_CONTRIB = tuple(_bit_contribution(iv_bit_position(i)) for i in range(IV_BITS))


class BatchCipher:
    """Many WG-7 instances in lockstep; ``stages[j]`` is a uint8 array of length N."""

    def __init__(self, stages):
        self.stages = [np.asarray(a, dtype=np.uint8) for a in stages]
        if len(self.stages) != STAGES:
            raise ValueError("need 23 stage arrays")

    @classmethod
    def load(cls, keys, ivs):
        """Load from bit matrices of shape (N, 80) and (N, 81)."""
        keys = np.asarray(keys, dtype=np.uint8)
        ivs = np.asarray(ivs, dtype=np.uint8)
        n = keys.shape[0]
        stages = [np.zeros(n, dtype=np.uint8) for _ in range(STAGES)]
        for i, (j, e) in enumerate(KEY_CONTRIB):
            stages[j] ^= keys[:, i] * np.uint8(e)
        for i, (j, e) in enumerate(IV_CONTRIB):
            stages[j] ^= ivs[:, i] * np.uint8(e)
        return cls(stages)

    def init_rounds(self, rounds):
        s = self.stages
        for _ in range(rounds):
            new = s[11] ^ _MULB[s[0]] ^ _WGP[s[22]]
            s = s[1:] + [new]
        self.stages = s
        return self

    def output_bit(self):
        return _FILTER[self.stages[22]]

    def keystream(self, n):
        s = self.stages
        out = np.empty((n, len(s[0])), dtype=np.uint8)
        for t in range(n):
            out[t] = _FILTER[s[22]]
            s = s[1:] + [s[11] ^ _MULB[s[0]]]
        self.stages = s
        return out
