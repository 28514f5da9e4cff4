"""Solver backends for :class:`MilpModel` feasibility queries.

Three interchangeable backends:

* :class:`TrailBackend` answers from the built-in division-trail search using
  the parameters recorded in ``model.meta``;
* :class:`ScipyBackend` solves the model in-process with ``scipy.optimize.milp``;
* :class:`CommandBackend` writes an LP file and runs an external solver from a
  command template with ``{lp}`` and ``{sol}`` placeholders (CBC-style
  solution files are parsed).

Each returns a :class:`SolveResult`; a missing solver raises
:class:`BackendUnavailable`, which is never reported as infeasible.
"""

import enum
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse

from .. import trail
from .model import emit_lp


class Status(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIMEOUT = "timeout"


class BackendUnavailable(RuntimeError):
    """The requested solver cannot be run here."""


class BackendError(RuntimeError):
    """The solver ran but produced output we cannot interpret."""


@dataclass
class SolveResult:
    status: Status
    backend: str
    seconds: float
    witness: list = None     # 0/1 value per var id, when the backend provides one
    trail: list = None       # division vectors per round, when recoverable
    detail: str = ""

    @property
    def feasible(self):
        return self.status is Status.FEASIBLE


def witness_trail(model, witness):
    """Division vectors ``[k_0, ..., k_R]`` read off a full assignment."""
    out = []
    for S in model.meta["states"]:
        out.append(sum(int(round(witness[v])) << i for i, v in enumerate(S)))
    return out


class TrailBackend:
    name = "trail"

    def __init__(self, budget=trail.DEFAULT_BUDGET):
        self.budget = budget

    def solve(self, model):
        m = model.meta
        if "states" not in m or not m.get("with_output", True):
            raise BackendUnavailable("trail backend needs a model from build_wg7_eval")
        t0 = time.perf_counter()
        if m.get("initial") is not None:
            k0 = m["initial"]
        else:
            keys = () if m["key_bit"] is None else (m["key_bit"],)
            # free key bits: the all-zero choice is minimal, hence dominates
            k0 = trail.RoundSpec(m["rounds"], m["cube"], keys).initial_vector()
        spec = trail.RoundSpec(m["rounds"], (), (), m["matrix"])
        if k0 == 0 and not m["exact_and"]:
            # the bare AND bound lets an idle gadget output 1
            return SolveResult(Status.FEASIBLE, self.name, time.perf_counter() - t0,
                               trail=[0] * (m["rounds"] + 1), detail="vacuous AND trail")
        starts = [k0]
        if k0 == 0 and m.get("initial") is None and m["key_bit"] is None:
            # reachability is downward closed among nonzero vectors, so with a
            # free key and nothing else set the single key bits are the cases
            starts = [trail.RoundSpec(0, (), (j,)).initial_vector() for j in range(80)]
        eng = trail.TrailEngine(m["matrix"], budget=self.budget)
        found = None
        try:
            for k in starts:
                found = eng.find_trail(spec, initial=k) if k else None
                if found is not None:
                    break
        except trail.BudgetExceeded as e:
            return SolveResult(Status.TIMEOUT, self.name, time.perf_counter() - t0, detail=str(e))
        dt = time.perf_counter() - t0
        if found is None:
            return SolveResult(Status.INFEASIBLE, self.name, dt)
        return SolveResult(Status.FEASIBLE, self.name, dt, trail=found)


def _matrix_form(model):
    rows, cols, data = [], [], []
    lb, ub = [], []
    for r, con in enumerate(model.constraints):
        for c, v in con.terms:
            rows.append(r)
            cols.append(v)
            data.append(c)
        lb.append(con.rhs if con.sense in (">=", "=") else -np.inf)
        ub.append(con.rhs if con.sense in ("<=", "=") else np.inf)
    A = sparse.csr_array((data, (rows, cols)), shape=(len(model.constraints), model.num_vars()))
    return A, np.array(lb, dtype=float), np.array(ub, dtype=float)


class ScipyBackend:
    name = "scipy"

    def __init__(self, time_limit=None):
        self.time_limit = time_limit

    def solve(self, model):
        n = model.num_vars()
        c = np.zeros(n)
        if model.objective is not None:
            sense, ids = model.objective
            c[list(ids)] = -1.0 if sense == "max" else 1.0
        A, lb, ub = _matrix_form(model)
        opts = {}
        if self.time_limit is not None:
            opts["time_limit"] = self.time_limit
        t0 = time.perf_counter()
        res = optimize.milp(c, constraints=optimize.LinearConstraint(A, lb, ub),
                            integrality=np.ones(n), bounds=optimize.Bounds(0, 1),
                            options=opts)
        dt = time.perf_counter() - t0
        if res.status == 0:
            w = [int(round(x)) for x in res.x]
            return SolveResult(Status.FEASIBLE, self.name, dt, witness=w,
                               trail=_maybe_trail(model, w))
        if res.status == 2:
            return SolveResult(Status.INFEASIBLE, self.name, dt)
        if res.status == 1:
            if res.x is not None:
                w = [int(round(x)) for x in res.x]
                return SolveResult(Status.FEASIBLE, self.name, dt, witness=w,
                                   trail=_maybe_trail(model, w))
            return SolveResult(Status.TIMEOUT, self.name, dt, detail=res.message)
        raise BackendError(f"scipy milp status {res.status}: {res.message}")


def _maybe_trail(model, w):
    return witness_trail(model, w) if "states" in model.meta else None


def bundled_cbc():
    """Path of a CBC binary on PATH or shipped with PuLP, if either exists."""
    path = shutil.which("cbc")
    if path:
        return path
    try:
        from pulp.apis import coin_api  # optional; only used to locate its bundled binary
    except ImportError:
        return None
    path = getattr(coin_api, "pulp_cbc_path", None)
    return path if path and os.path.exists(path) else None


def parse_cbc_solution(text, model):
    """(status, witness) from a CBC ``solu`` file."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise BackendError("empty solution file")
    head = lines[0].lower()
    if "infeasible" in head:
        return Status.INFEASIBLE, None
    if "stopped" in head or "time" in head:
        status = Status.TIMEOUT
    elif "optimal" in head or "feasible" in head:
        status = Status.FEASIBLE
    else:
        raise BackendError(f"unrecognised solver status line: {lines[0]!r}")
    w = [0] * model.num_vars()
    found = False
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "**":
            parts = parts[1:]
        if len(parts) < 3:
            continue
        name, val = parts[1], parts[2]
        try:
            w[model.var_id(name)] = int(round(float(val)))
            found = True
        except KeyError:
            continue
    if status is Status.TIMEOUT:
        return (Status.FEASIBLE, w) if found else (Status.TIMEOUT, None)
    return status, w


class CommandBackend:
    """External MILP solver driven by an LP file.

    ``template`` is split with shell rules; ``{lp}`` and ``{sol}`` are
    replaced by file paths.  CBC example: ``cbc {lp} solve solu {sol}``.
    """

    name = "command"

    def __init__(self, template, timeout=None):
        if "{lp}" not in template:
            raise ValueError("solver command template needs an {lp} placeholder")
        self.template = template
        self.timeout = timeout

    def solve(self, model):
        with tempfile.TemporaryDirectory(prefix="wg7milp") as d:
            lp = os.path.join(d, "model.lp")
            sol = os.path.join(d, "model.sol")
            with open(lp, "w") as fh:
                fh.write(emit_lp(model))
            argv = [a.format(lp=lp, sol=sol) for a in shlex.split(self.template)]
            if shutil.which(argv[0]) is None:
                raise BackendUnavailable(f"solver executable not found: {argv[0]}")
            t0 = time.perf_counter()
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            except subprocess.TimeoutExpired:
                return SolveResult(Status.TIMEOUT, self.name, time.perf_counter() - t0,
                                   detail=f"no answer within {self.timeout} s")
            dt = time.perf_counter() - t0
            if not os.path.exists(sol):
                raise BackendError(f"solver wrote no solution file (exit {proc.returncode}): "
                                   f"{proc.stdout[-500:]}{proc.stderr[-500:]}")
            with open(sol) as fh:
                status, w = parse_cbc_solution(fh.read(), model)
        res = SolveResult(status, self.name, dt, witness=w)
        if w is not None:
            res.trail = _maybe_trail(model, w)
        return res


def backend_from_config(engine="trail", solver_cmd=None, budget=trail.DEFAULT_BUDGET,
                        time_limit=None):
    """Pick a backend by name: ``trail``, ``scipy`` or ``command`` (needs ``solver_cmd``)."""
    if engine == "trail":
        return TrailBackend(budget)
    if engine == "scipy":
        return ScipyBackend(time_limit)
    if engine == "command":
        if not solver_cmd:
            raise BackendUnavailable("no solver command configured")
        return CommandBackend(solver_cmd, time_limit)
    raise ValueError(f"unknown engine {engine!r}")


def solve(model, backend):
    return backend.solve(model)
