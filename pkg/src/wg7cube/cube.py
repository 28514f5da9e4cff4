"""Cube sums, superpoly tables and the key-recovery simulation.

A cube sum XORs the first keystream bit (after ``R`` initialization rounds)
over all assignments of the cube IV bits.  Everything is evaluated with
:class:`~wg7cube.cipher.BatchCipher`; loading is linear, so key and IV
contributions to the stages are built separately and combined by broadcasting.

Index conventions: cube assignment ``c`` sets ``IV[I[b]] = (c >> b) & 1``;
table index ``jhat`` sets ``K[J[b]] = (jhat >> b) & 1`` with ``J`` ascending.
"""

import hashlib
import json
import math
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import cipher, trail

DESK_MAX_J = 22
T1_MAGIC = b"WG7T1\x00\x00\x01"
T1_HEADER = struct.Struct("<8sHHQQ4x")   # magic, |J|, R, cube hash, seed: 32 bytes

CUBES = {
    "I1": ((0, 36, 37, 73, 74, 75, 76), 14),
    "I2": ((35, 37, 73, 74, 75, 76, 80), 15),
    "I3": ((36, 37, 73, 74, 75, 76, 78), 16),
    "I4": ((35, 37, 73, 74, 75, 76, 77), 17),
    "I5": ((36, 37, 45, 73, 74, 75, 76), 18),
    "I6": ((35, 37, 73, 74, 75, 76, 79), 19),
    "I7": ((35, 37, 38, 73, 74, 75, 76), 20),
    "I8": ((35, 37, 39, 73, 74, 75, 76), 20),
}

# published involved-key sets; I8 shares the 20-round row with I7
REFERENCE_J = {
    "I1": "0-6,39-48,77-79",
    "I2": "0-10,39-52,77-79",
    "I3": "0-13,39-55,77-79",
    "I4": "0-17,39-59,77-79",
    "I5": "0-20,39-62,77-79",
    "I6": "0-24,39-66,77-79",
    "I7": "0-27,39-69,77-79",
    "I8": "0-27,39-69,77-79",
}


class TableBudgetExceeded(RuntimeError):
    """A superpoly table larger than the configured ceiling was requested."""


class ScreeningFailed(RuntimeError):
    def __init__(self, attempts, verdicts):
        super().__init__(f"no acceptable superpoly in {attempts} trials: {verdicts}")
        self.attempts = attempts
        self.verdicts = verdicts


@dataclass(frozen=True)
class CubeSpec:
    """Cube indices ``I``, the constant IV bits off the cube (ascending index order) and rounds."""

    I: tuple
    iv_const: tuple
    R: int
    name: str = ""

    def __post_init__(self):
        I = tuple(int(i) for i in self.I)
        if list(I) != sorted(set(I)):
            raise ValueError("cube indices must be sorted and distinct")
        if I and not (0 <= I[0] and I[-1] < cipher.IV_BITS):
            raise ValueError("cube index outside 0..80")
        if len(self.iv_const) != cipher.IV_BITS - len(I):
            raise ValueError(f"iv_const needs {cipher.IV_BITS - len(I)} bits, got {len(self.iv_const)}")
        if any(b not in (0, 1) for b in self.iv_const):
            raise ValueError("iv_const bits must be 0 or 1")
        if self.R < 0:
            raise ValueError("rounds must be >= 0")
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "iv_const", tuple(int(b) for b in self.iv_const))

    @classmethod
    def make(cls, I, R, iv=None, name=""):
        """Build from a full 81-bit IV (cube positions ignored); default all-zero."""
        I = tuple(sorted(I))
        iv = (0,) * cipher.IV_BITS if iv is None else tuple(iv)
        cset = set(I)
        return cls(I, tuple(iv[i] for i in range(cipher.IV_BITS) if i not in cset), R, name)

    def iv_bits(self):
        """81-bit IV with the cube positions set to zero."""
        out = [0] * cipher.IV_BITS
        it = iter(self.iv_const)
        cset = set(self.I)
        for i in range(cipher.IV_BITS):
            if i not in cset:
                out[i] = next(it)
        return tuple(out)

    def with_iv_const(self, iv_const):
        return CubeSpec(self.I, tuple(iv_const), self.R, self.name)

    def digest(self):
        blob = json.dumps([self.I, self.iv_const, self.R]).encode()
        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def named_cube(name, rounds=None):
    I, R = CUBES[name]
    return CubeSpec.make(I, R if rounds is None else rounds, name=name)


# -- evaluation ---------------------------------------------------------------

def _key_stages(keys):
    """(23, n) stage values contributed by key bit rows ``keys`` of shape (n, 80)."""
    keys = np.asarray(keys, dtype=np.uint8)
    st = np.zeros((cipher.STAGES, keys.shape[0]), dtype=np.uint8)
    for i, (j, e) in enumerate(cipher.KEY_CONTRIB):
        st[j] ^= keys[:, i] * np.uint8(e)
    return st


def _iv_stages(spec):
    """(23, 2^|I|) stage values of the IV over every cube assignment."""
    base = np.zeros(cipher.STAGES, dtype=np.uint8)
    for i, b in enumerate(spec.iv_bits()):
        if b:
            j, e = cipher.IV_CONTRIB[i]
            base[j] ^= e
    c = np.arange(1 << len(spec.I))
    st = np.repeat(base[:, None], len(c), axis=1)
    for b, i in enumerate(spec.I):
        j, e = cipher.IV_CONTRIB[i]
        st[j] ^= ((c >> b) & 1).astype(np.uint8) * np.uint8(e)
    return st


def _sums(R, key_st, iv_st):
    nk, ni = key_st.shape[1], iv_st.shape[1]
    stages = [(key_st[j][:, None] ^ iv_st[j][None, :]).ravel() for j in range(cipher.STAGES)]
    out = cipher.BatchCipher(stages).init_rounds(R).output_bit().reshape(nk, ni)
    return np.bitwise_xor.reduce(out, axis=1)


def cube_sums(keys, spec):
    """Cube sum for each row of ``keys`` (shape (n, 80))."""
    return _sums(spec.R, _key_stages(keys), _iv_stages(spec))


def cube_sum(key, spec):
    return int(cube_sums(np.asarray(key, dtype=np.uint8)[None, :], spec)[0])


def boolean_cube_sum(func, cube_mask, point):
    """XOR of ``func(x)`` over the variables in ``cube_mask``; the rest come from ``point``.

    ``func`` takes an int whose bits are the variables.
    """
    base = point & ~cube_mask
    s = m = cube_mask
    acc = 0
    while True:
        acc ^= func(base | s) & 1
        if s == 0:
            return acc
        s = (s - 1) & m


def _keys_for(base_key, J, jhats):
    keys = np.repeat(np.asarray(base_key, dtype=np.uint8)[None, :], len(jhats), axis=0)
    for b, j in enumerate(J):
        keys[:, j] = (jhats >> b) & 1
    return keys


# -- superpoly tables ---------------------------------------------------------

@dataclass
class SuperpolyProfile:
    spec: CubeSpec
    J: tuple
    base_key: tuple
    table: np.ndarray      # uint8 bits, length 2^|J|

    def __post_init__(self):
        if len(self.table) != 1 << len(self.J):
            raise ValueError("table length must be 2^|J|")

    @property
    def ones_count(self):
        return int(np.count_nonzero(self.table))

    @property
    def verdict(self):
        n, ones = len(self.table), self.ones_count
        if ones == 0:
            return "constant-0"
        if ones == n:
            return "constant-1"
        return "balanced" if 2 * ones == n else "unbalanced"

    def index_of(self, key):
        return sum(int(key[j]) << b for b, j in enumerate(self.J))

    def summary(self):
        return {
            "record": "superpoly",
            "cube_name": self.spec.name,
            "rounds": self.spec.R,
            "cube": list(self.spec.I),
            "iv": cipher.format_iv(self.spec.iv_bits()),
            "J": trail.format_indices(self.J),
            "size_J": len(self.J),
            "ones_count": self.ones_count,
            "verdict": self.verdict,
        }


def _table_chunk(args):
    spec, J, base_key, lo, hi = args
    jh = np.arange(lo, hi, dtype=np.int64)
    return lo, _sums(spec.R, _key_stages(_keys_for(base_key, J, jh)), _iv_stages(spec))


def _save_checkpoint(path, meta, table, done):
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, meta=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                 table=np.packbits(table, bitorder="little"), done=done)
    os.replace(tmp, path)


def _load_checkpoint(path, meta, n, chunks):
    if not path or not os.path.exists(path):
        return None
    with np.load(path) as z:
        if json.loads(z["meta"].tobytes().decode()) != meta:
            raise ValueError(f"checkpoint {path} belongs to a different table")
        table = np.unpackbits(z["table"], bitorder="little")[:n].copy()
        done = z["done"].copy()
    if len(done) != chunks:
        raise ValueError(f"checkpoint {path} has a different chunking")
    return table, done


def superpoly_table(spec, J, base_key=None, max_bits=DESK_MAX_J, workers=1,
                    checkpoint=None, chunk_evals=1 << 20, progress=None):
    """Superpoly values for every assignment of the key bits ``J``.

    Key bits outside ``J`` come from ``base_key`` (default all zero).  Work is
    split into chunks of about ``chunk_evals`` cipher runs; with ``checkpoint``
    the finished chunks are persisted after each one and a rerun resumes.
    """
    J = tuple(sorted(J))
    if len(J) > max_bits:
        raise TableBudgetExceeded(f"|J| = {len(J)} exceeds the table ceiling of {max_bits} bits")
    base_key = tuple(base_key) if base_key is not None else (0,) * cipher.KEY_BITS
    n = 1 << len(J)
    per = max(1, chunk_evals >> len(spec.I))
    chunks = (n + per - 1) // per
    meta = {"I": list(spec.I), "iv": list(spec.iv_const), "R": spec.R, "J": list(J),
            "base_key": list(base_key), "per": per}
    state = _load_checkpoint(checkpoint, meta, n, chunks)
    table, done = state if state else (np.zeros(n, dtype=np.uint8), np.zeros(chunks, dtype=bool))
    jobs = [(spec, J, base_key, c * per, min(n, (c + 1) * per)) for c in range(chunks) if not done[c]]

    def absorb(lo, bits):
        table[lo:lo + len(bits)] = bits
        done[lo // per] = True
        if checkpoint:
            _save_checkpoint(checkpoint, meta, table, done)
        if progress:
            progress(int(done.sum()), chunks)

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for lo, bits in ex.map(_table_chunk, jobs):
                absorb(lo, bits)
    else:
        for job in jobs:
            absorb(*_table_chunk(job))
    return SuperpolyProfile(spec, J, base_key, table)


def write_table(path, profile, seed=0):
    """T_1 file: 32-byte header, then the table packed little-endian within bytes."""
    head = T1_HEADER.pack(T1_MAGIC, len(profile.J), profile.spec.R, profile.spec.digest(), seed)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.packbits(profile.table, bitorder="little").tobytes())


def read_table(path):
    """(header dict, table bits) from a T_1 file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < T1_HEADER.size:
        raise ValueError("T_1 file shorter than its header")
    magic, nj, R, cube_hash, seed = T1_HEADER.unpack_from(raw)
    if magic != T1_MAGIC:
        raise ValueError("not a T_1 table file")
    n = 1 << nj
    body = np.frombuffer(raw, dtype=np.uint8, offset=T1_HEADER.size)
    if len(body) != (n + 7) // 8:
        raise ValueError(f"T_1 body has {len(body)} bytes, expected {(n + 7) // 8}")
    bits = np.unpackbits(body, bitorder="little")[:n]
    return {"size_J": nj, "rounds": R, "cube_hash": cube_hash, "seed": seed}, bits


# -- screening and soundness checks -------------------------------------------

ACCEPT = {
    "nonconstant": ("balanced", "unbalanced"),
    "balanced": ("balanced",),
}


def screen_iv(spec, J, trials, seed=0, require="nonconstant", base_key=None, **table_kw):
    """Draw non-cube IV constants until the superpoly table is acceptable.

    Returns ``(accepted spec, attempts, profile)``; raises :class:`ScreeningFailed`
    when every trial is rejected.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ok = ACCEPT[require]
    rng = np.random.default_rng(seed)
    verdicts = []
    for attempt in range(1, trials + 1):
        iv_const = rng.integers(0, 2, size=len(spec.iv_const), dtype=np.uint8)
        cand = spec.with_iv_const(tuple(int(b) for b in iv_const))
        prof = superpoly_table(cand, J, base_key, **table_kw)
        verdicts.append(prof.verdict)
        if prof.verdict in ok:
            return cand, attempt, prof
    raise ScreeningFailed(trials, verdicts)


def empirical_dependence(spec, trials, seed=0):
    """Key bits whose flip changed the cube sum for some random (key, IV constant) draw."""
    rng = np.random.default_rng(seed)
    found = set()
    for _ in range(trials):
        key = rng.integers(0, 2, size=cipher.KEY_BITS, dtype=np.uint8)
        iv_const = rng.integers(0, 2, size=len(spec.iv_const), dtype=np.uint8)
        cand = spec.with_iv_const(tuple(int(b) for b in iv_const))
        keys = np.repeat(key[None, :], cipher.KEY_BITS + 1, axis=0)
        idx = np.arange(cipher.KEY_BITS)
        keys[idx + 1, idx] ^= 1
        s = _sums(spec.R, _key_stages(keys), _iv_stages(cand))
        found.update(int(j) for j in np.flatnonzero(s[1:] != s[0]))
    return frozenset(found)


# -- online phase ---------------------------------------------------------------

@dataclass(frozen=True)
class CubeConstraint:
    name: str
    J: tuple
    observed: int
    surviving: int
    total: int
    true_key_consistent: bool

    @property
    def fraction(self):
        return self.surviving / self.total

    @property
    def bits(self):
        return math.log2(self.total / self.surviving) if self.surviving else float("inf")


@dataclass(frozen=True)
class OnlineResult:
    constraints: tuple

    @property
    def true_key_survives(self):
        return all(c.true_key_consistent for c in self.constraints)

    @property
    def bits_recovered(self):
        return sum(c.bits for c in self.constraints)


def online_recover(true_key, cubes):
    """Simulate the oracle and keep, per cube, the J-assignments matching its cube sum."""
    out = []
    for spec, prof in cubes:
        obs = cube_sum(true_key, spec)
        surviving = int(np.count_nonzero(prof.table == obs))
        ok = int(prof.table[prof.index_of(true_key)]) == obs
        out.append(CubeConstraint(spec.name, prof.J, obs, surviving, len(prof.table), ok))
    return OnlineResult(tuple(out))


# -- complexity accounting ------------------------------------------------------

@dataclass(frozen=True)
class AttackReport:
    rows: tuple    # of trail.InvolvedKeyRecord

    @property
    def log2_time(self):
        total = sum(1 << r.log2_time for r in self.rows)
        return math.log2(total + (1 << (cipher.KEY_BITS - len(self.rows))))

    @property
    def log2_data(self):
        return math.log2(sum(1 << len(r.cube) for r in self.rows))

    def records(self):
        lines = [r.to_json() for r in self.rows]
        lines.append(json.dumps({"record": "complexity", "cubes": len(self.rows),
                                 "log2_time": self.log2_time, "log2_data": self.log2_data},
                                sort_keys=True))
        return lines

    def format_table(self):
        head = f"{'cube':<5} {'indices':<24} {'R':>3}  {'J':<22} {'|J|':>4}  time"
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(f"{r.name:<5} {','.join(map(str, r.cube)):<24} {r.rounds:>3}  "
                         f"{trail.format_indices(r.J):<22} {len(r.J):>4}  "
                         f"2^({len(r.J)}+{len(r.cube)})")
        lines.append(f"total time 2^{self.log2_time:.2f}, data 2^{self.log2_data:.2f}")
        return "\n".join(lines)


def complexity_report(rows):
    return AttackReport(tuple(rows))


def reference_rows():
    """Table rows as published: each cube at its own round count."""
    return [trail.InvolvedKeyRecord(n, CUBES[n][1], CUBES[n][0],
                                    trail.parse_indices(REFERENCE_J[n])) for n in CUBES]


def twenty_round_rows(J=None):
    """All eight cubes at 20 rounds, the setting of the full key-recovery count.

    ``J`` maps cube name to its 20-round involved keys; by default the
    published 20-round set is used for every cube.
    """
    J = J or {}
    default = trail.parse_indices(REFERENCE_J["I7"])
    return [trail.InvolvedKeyRecord(n, 20, CUBES[n][0], tuple(J.get(n, default)))
            for n in CUBES]
