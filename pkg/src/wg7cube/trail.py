"""Division-trail feasibility search over reduced-round WG-7 initialization.

A division vector is a 161-bit int (bit i = state bit s_i).  One round maps a
vector through: the WGP S-box on stage 22 (after a copy), the linear layer on
all of stage 0, a copy of stage 11 into the feedback, XOR of the three
feedback contributions into the new stage 22, and the shift.  The output
question is whether some trail ends in a vector that one filter monomial
consumes completely (z = 1 with every residual bit zero).

Reachability of that output is downward closed among nonzero vectors (drop a
bit from a trail and a valid trail remains; a nonzero vector never propagates
to zero), so each frontier is reduced to its minimal elements; bits that can
no longer reach stage 22 in the remaining rounds are pruned.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

from . import cipher, divprop, tables

MASK7 = 0x7F
STAGE0 = MASK7
STAGE11 = MASK7 << 77
STAGE22 = MASK7 << 154
DEFAULT_BUDGET = 10 ** 8


class BudgetExceeded(RuntimeError):
    """The node budget ran out before the search finished; no verdict."""


def rounds_to_stage22(stage):
    """Fewest rounds until a bit now in ``stage`` can sit in stage 22."""
    if stage == 22:
        return 0
    if stage in (0, 11):
        return 1
    if stage > 11:
        return stage - 10
    return stage + 1


@dataclass(frozen=True)
class RoundSpec:
    rounds: int
    cube: tuple = ()
    key_bits: tuple = ()
    matrix: str = "system"

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        for i in self.cube:
            if not 0 <= i < cipher.IV_BITS:
                raise ValueError(f"cube index {i} outside 0..80")
        for i in self.key_bits:
            if not 0 <= i < cipher.KEY_BITS:
                raise ValueError(f"key index {i} outside 0..79")

    def initial_vector(self):
        k = 0
        for i in self.cube:
            k |= 1 << cipher.iv_bit_position(i)
        for i in self.key_bits:
            k |= 1 << cipher.key_bit_position(i)
        return k


@dataclass
class Frontier:
    round: int
    vectors: frozenset
    parents: dict = dc_field(default_factory=dict)


class TrailEngine:
    def __init__(self, matrix="system", budget=DEFAULT_BUDGET, reduce=True, prune=True):
        self.matrix = matrix
        self.budget = budget
        self.reduce = reduce
        self.prune = prune
        self.nodes = 0
        self.sbox = tables.wgp_trail_table().minimal_map
        self.linear = tables.linear_table(matrix)
        accept = set()
        for m in tables.ksg_monomial_masks():
            accept.update(s for s in divprop.submasks(m) if s)
        self.accept = frozenset(accept)
        self._far = []
        for rem in range(24):
            mask = 0
            for j in range(cipher.STAGES):
                if rounds_to_stage22(j) > rem:
                    mask |= MASK7 << (7 * j)
            self._far.append(mask)

    def _charge(self, n):
        self.nodes += n
        if self.budget is not None and self.nodes > self.budget:
            raise BudgetExceeded(f"node budget {self.budget} exceeded")

    def successors(self, k):
        """All vectors one round after ``k`` (no reduction, no pruning)."""
        u0 = k & MASK7
        u11 = (k >> 77) & MASK7
        u22 = (k >> 154) & MASK7
        base = (k & ~(STAGE0 | STAGE11 | STAGE22)) >> 7
        out = set()
        for v0 in self.linear[u0]:
            for x11 in divprop.submasks(u11):
                if v0 & x11:
                    continue
                fb = v0 | x11
                kept = base | ((u11 ^ x11) << 70)
                for x22 in divprop.submasks(u22):
                    rest = kept | ((u22 ^ x22) << 147)
                    for w in self.sbox[x22]:
                        if not w & fb:
                            out.add(rest | ((w | fb) << 154))
        return out

    def accepts(self, k):
        return k != 0 and not k & ~STAGE22 and (k >> 154) in self.accept

    def viable(self, k, remaining):
        if remaining >= len(self._far):
            return True
        return not k & self._far[remaining]

    def propagate_round(self, frontier, total_rounds=None):
        nxt = {}
        for k in frontier.vectors:
            succ = self.successors(k)
            self._charge(len(succ) + 1)
            for s in succ:
                nxt.setdefault(s, k)
        vecs = set(nxt)
        if self.prune and total_rounds is not None:
            remaining = total_rounds - frontier.round - 1
            vecs = {v for v in vecs if self.viable(v, remaining)}
        if self.reduce:
            vecs = divprop.reduce(vecs)
        return Frontier(frontier.round + 1, frozenset(vecs), {v: nxt[v] for v in vecs})

    def run(self, spec, initial=None):
        """Frontiers for rounds 0..R (stops early if a frontier empties)."""
        k0 = spec.initial_vector() if initial is None else initial
        f = Frontier(0, frozenset([k0]))
        if self.prune and not self.viable(k0, spec.rounds):
            f = Frontier(0, frozenset())
        out = [f]
        for _ in range(spec.rounds):
            if not f.vectors:
                break
            f = self.propagate_round(f, spec.rounds)
            out.append(f)
        return out

    def reaches_unit_output(self, spec, initial=None):
        fronts = self.run(spec, initial)
        if len(fronts) != spec.rounds + 1:
            return False
        return any(self.accepts(k) for k in fronts[-1].vectors)

    def find_trail(self, spec, initial=None):
        """A witness trail ``[k_0, ..., k_R]`` ending in an accepted vector, or None."""
        fronts = self.run(spec, initial)
        if len(fronts) != spec.rounds + 1:
            return None
        ends = sorted(k for k in fronts[-1].vectors if self.accepts(k))
        if not ends:
            return None
        trail = [ends[0]]
        for f in reversed(fronts[1:]):
            trail.append(f.parents[trail[-1]])
        return trail[::-1]


def check_trail(trail, matrix="system"):
    """Replay a trail under the propagation rules; True if every step is legal."""
    eng = TrailEngine(matrix=matrix, budget=None)
    for a, b in zip(trail, trail[1:]):
        if b not in eng.successors(a):
            return False
    return eng.accepts(trail[-1])


def reaches_unit_output(spec, budget=DEFAULT_BUDGET):
    return TrailEngine(spec.matrix, budget=budget).reaches_unit_output(spec)


def _key_bit_query(args):
    rounds, cube, j, matrix, budget = args
    spec = RoundSpec(rounds, tuple(cube), (j,), matrix)
    return j, TrailEngine(matrix, budget=budget).reaches_unit_output(spec)


def involved_keys(rounds, cube, matrix="system", budget=DEFAULT_BUDGET, workers=1,
                  key_others="zero"):
    """Key bits whose unit division vector (with the cube) reaches the output.

    ``budget`` bounds the nodes of each per-bit search.  ``key_others`` may be
    ``"free"``: by downward closure that gives the same answer as ``"zero"``
    (the minimal initial vector dominates every other choice), so both run the
    same search.
    """
    if key_others not in ("zero", "free"):
        raise ValueError("key_others must be 'zero' or 'free'")
    jobs = [(rounds, tuple(cube), j, matrix, budget) for j in range(cipher.KEY_BITS)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_key_bit_query, jobs))
    else:
        results = [_key_bit_query(a) for a in jobs]
    return tuple(j for j, ok in results if ok)


# -- report records ---------------------------------------------------------

def format_indices(idx):
    """Compact range notation, e.g. ``0-6,39-48,77-79``."""
    idx = sorted(idx)
    parts = []
    i = 0
    while i < len(idx):
        j = i
        while j + 1 < len(idx) and idx[j + 1] == idx[j] + 1:
            j += 1
        parts.append(str(idx[i]) if i == j else f"{idx[i]}-{idx[j]}")
        i = j + 1
    return ",".join(parts)


def parse_indices(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


@dataclass(frozen=True)
class InvolvedKeyRecord:
    name: str
    rounds: int
    cube: tuple
    J: tuple

    @property
    def log2_time(self):
        return len(self.cube) + len(self.J)

    def to_json(self):
        return json.dumps({
            "record": "involved_keys",
            "cube_name": self.name,
            "rounds": self.rounds,
            "cube": list(self.cube),
            "J": format_indices(self.J),
            "size_J": len(self.J),
            "log2_time": self.log2_time,
        }, sort_keys=True)

