"""``wg7cube`` command line: keystream, model, extract-j, attack, selftest.

Every flag can also come from an environment variable named ``WG7_`` plus the
flag in upper case (``--solver-cmd`` -> ``WG7_SOLVER_CMD``); a flag on the
command line wins.  Reports are JSON lines and start with a config record.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import cipher, cube, divprop, field, milp, tables, trail

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_VERIFY = 4
EXIT_UNAVAILABLE = 5


def version():
    try:
        from importlib.metadata import version as v
        return v("wg7cube")
    except Exception:
        return "unknown"


class UsageError(Exception):
    pass


def parse_cube(text):
    """``I1``..``I8`` or a comma list / ranges such as ``0,36-37,73-76``."""
    text = text.strip()
    if text.upper() in cube.CUBES:
        return cube.CUBES[text.upper()][0], text.upper()
    if not text:
        return (), ""
    try:
        idx = trail.parse_indices(text)
    except ValueError:
        raise UsageError(f"bad cube {text!r}")
    for i in idx:
        if not 0 <= i < cipher.IV_BITS:
            raise UsageError(f"cube index {i} outside 0..80")
    if len(set(idx)) != len(idx):
        raise UsageError("cube indices repeat")
    return tuple(sorted(idx)), ""


def _env(name, default=None, cast=str):
    raw = os.environ.get("WG7_" + name.upper().replace("-", "_"))
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"environment override WG7_{name.upper()} is not a valid {cast.__name__}")


def _common(p, rounds=None):
    p.add_argument("--rounds", type=int, default=_env("rounds", rounds, int))
    p.add_argument("--seed", type=int, default=_env("seed", 0, int))
    p.add_argument("--workers", type=int, default=_env("workers", 1, int))
    p.add_argument("--matrix", choices=("system", "field"), default=_env("matrix", "system"))
    p.add_argument("--budget", type=int, default=_env("budget", trail.DEFAULT_BUDGET, int))
    p.add_argument("--engine", choices=("trail", "milp"), default=_env("engine", "trail"))
    p.add_argument("--solver-cmd", default=_env("solver_cmd"),
                   help="external solver template with {lp} and {sol}, e.g. 'cbc {lp} solve solu {sol}'")
    p.add_argument("--out", default=_env("out"))


def build_parser():
    ap = argparse.ArgumentParser(prog="wg7cube", description="Cube-attack toolkit for reduced WG-7.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keystream", help="keystream bits and final state digest")
    _common(p, cipher.FULL_INIT_ROUNDS)
    p.add_argument("--key", default=_env("key", "0" * 20), help="20 hex characters")
    p.add_argument("--iv", default=_env("iv", "0" * 81), help="81 binary characters")
    p.add_argument("-n", type=int, default=_env("n", 1, int))

    p = sub.add_parser("model", help="emit the MILP for R rounds as an LP file")
    _common(p, 1)
    p.add_argument("--cube", default=_env("cube", ""))
    p.add_argument("--key-bit", type=int, default=_env("key_bit", None, int))
    p.add_argument("--literal", action="store_true",
                   help="omit invertibility cuts and AND exactness rows")

    p = sub.add_parser("extract-j", help="involved key bits for a cube")
    _common(p, 14)
    p.add_argument("--cube", default=_env("cube", "I1"))

    p = sub.add_parser("attack", help="screening, offline table and online simulation")
    _common(p, 14)
    p.add_argument("--cube", action="append", default=None,
                   help="cube name or indices; repeatable (default I1)")
    p.add_argument("--trials", type=int, default=_env("trials", 4, int))
    p.add_argument("--require", choices=("nonconstant", "balanced"), default=_env("require", "nonconstant"))
    p.add_argument("--max-j", type=int, default=_env("max_j", cube.DESK_MAX_J, int))
    p.add_argument("--checkpoint-dir", default=_env("checkpoint_dir"))

    p = sub.add_parser("selftest", help="fast consistency checks")
    _common(p)
    p.add_argument("--inequalities", default=_env("inequalities"),
                   help="alternative inequality file to check")
    return ap


class Reporter:
    def __init__(self, args, path):
        self.fh = open(path, "a") if path else None
        cfg = {k: v for k, v in vars(args).items() if k != "func"}
        self.emit({"record": "config", "version": version(), **cfg})

    def emit(self, rec):
        if self.fh:
            self.fh.write(json.dumps(rec, sort_keys=True) + "\n")
            self.fh.flush()

    def close(self):
        if self.fh:
            self.fh.close()


def cmd_keystream(args, rep):
    try:
        key = cipher.parse_key(args.key)
        iv = cipher.parse_iv(args.iv)
    except cipher.InputError as e:
        raise UsageError(str(e))
    if args.rounds < 0 or args.n < 1:
        raise UsageError("need --rounds >= 0 and -n >= 1")
    st = cipher.load(key, iv)
    for _ in range(args.rounds):
        st = cipher.init_round(st)
    bits = []
    for _ in range(args.n):
        st, z = cipher.ksg_round(st)
        bits.append(z)
    text = "".join(map(str, bits))
    print(text)
    print("state", cipher.state_digest(st))
    rep.emit({"record": "keystream", "bits": text, "state": cipher.state_digest(st)})
    return EXIT_OK


def cmd_model(args, rep):
    if args.rounds is None or args.rounds < 1:
        raise UsageError("--rounds must be >= 1")
    I, _ = parse_cube(args.cube)
    R = args.rounds
    lit = milp.literal_model(R, I, args.key_bit)
    v, c = milp.model_size(lit)
    (av, bv), (ac, bc) = milp.REFERENCE_SIZE["vars"], milp.REFERENCE_SIZE["constraints"]
    pv, pc = av * R + bv, ac * R + bc
    print(f"gadgets as written: {v} variables, {c} constraints")
    print(f"published formulas: {pv} variables ({av}R+{bv}), {pc} constraints ({ac}R+{bc})")
    print(f"delta: variables {v - pv:+d}, constraints {c - pc:+d}")
    model = lit if args.literal else milp.build_wg7_eval(R, I, args.key_bit, matrix=args.matrix)
    if not args.literal:
        print(f"emitted model (with cuts): {model.num_vars()} variables, {model.num_constraints()} constraints")
    rec = {"record": "model_size", "rounds": R, "vars": v, "constraints": c,
           "reference_vars": pv, "reference_constraints": pc,
           "emitted_vars": model.num_vars(), "emitted_constraints": model.num_constraints()}
    if args.out:
        lp_path = args.out if args.out.endswith(".lp") else args.out + ".lp"
        try:
            with open(lp_path, "w") as fh:
                fh.write(milp.emit_lp(model))
        except OSError as e:
            raise UsageError(f"cannot write {lp_path}: {e}")
        print("wrote", lp_path)
        rec["lp"] = lp_path
    print(json.dumps(rec, sort_keys=True))
    return EXIT_OK


def _milp_backend(args):
    if args.solver_cmd:
        return milp.CommandBackend(args.solver_cmd)
    return milp.ScipyBackend()


def involved_keys(args, I):
    if args.engine == "trail":
        return trail.involved_keys(args.rounds, I, args.matrix, args.budget, args.workers)
    be = _milp_backend(args)
    J = []
    for j in range(cipher.KEY_BITS):
        res = milp.solve(milp.build_wg7_eval(args.rounds, I, j, matrix=args.matrix), be)
        if res.status is milp.Status.TIMEOUT:
            raise trail.BudgetExceeded(f"solver timed out on key bit {j}")
        if res.feasible:
            J.append(j)
    return tuple(J)


def cmd_extract_j(args, rep):
    I, name = parse_cube(args.cube)
    if args.rounds is None or args.rounds < 0:
        raise UsageError("--rounds must be >= 0")
    t0 = time.perf_counter()
    J = involved_keys(args, I)
    rec = trail.InvolvedKeyRecord(name or "custom", args.rounds, I, J)
    print(f"J = {trail.format_indices(J) or '(empty)'}")
    print(f"|J| = {len(J)}, offline time 2^({len(J)}+{len(I)}) = 2^{rec.log2_time}")
    out = json.loads(rec.to_json())
    out.update(engine=args.engine, seconds=round(time.perf_counter() - t0, 3))
    rep.emit(out)
    return EXIT_OK


def cmd_attack(args, rep):
    names = args.cube or [_env("cube", "I1")]
    rng = np.random.default_rng(args.seed)
    true_key = tuple(int(b) for b in rng.integers(0, 2, size=cipher.KEY_BITS))
    print("true key", cipher.format_key(true_key))
    rows, accepted, failed = [], [], 0
    for k, text in enumerate(names):
        I, name = parse_cube(text)
        name = name or f"C{k + 1}"
        J = involved_keys(args, I)
        rows.append(trail.InvolvedKeyRecord(name, args.rounds, I, J))
        spec = cube.CubeSpec.make(I, args.rounds, name=name)
        ckpt = None
        if args.checkpoint_dir:
            os.makedirs(args.checkpoint_dir, exist_ok=True)
            ckpt = os.path.join(args.checkpoint_dir, f"{name}_R{args.rounds}_s{args.seed}.npz")
        try:
            spec, attempts, prof = cube.screen_iv(
                spec, J, args.trials, seed=args.seed + k, require=args.require,
                max_bits=args.max_j, workers=args.workers, checkpoint=ckpt)
        except (cube.ScreeningFailed, cube.TableBudgetExceeded) as e:
            failed += 1
            print(f"{name}: FAILED ({e})")
            rep.emit({"record": "cube_failure", "cube_name": name, "reason": str(e)})
            continue
        accepted.append((spec, prof))
        summ = prof.summary()
        summ["attempts"] = attempts
        rep.emit(summ)
        print(f"{name}: |J|={len(J)} attempts={attempts} ones={prof.ones_count}/{len(prof.table)} "
              f"verdict={prof.verdict}")
    result = cube.online_recover(true_key, accepted)
    for c in result.constraints:
        print(f"{c.name}: observed={c.observed} surviving={c.surviving}/{c.total} "
              f"fraction={c.fraction:.6f} bits={c.bits:.6f} true_key_kept={c.true_key_consistent}")
        rep.emit({"record": "online", "cube_name": c.name, "observed": c.observed,
                  "surviving": c.surviving, "total": c.total, "bits": c.bits,
                  "true_key_consistent": c.true_key_consistent})
    print(f"recovered {result.bits_recovered:.6f} bits; true key survives: {result.true_key_survives}")
    report = cube.complexity_report(rows)
    print(report.format_table())
    for line in report.records():
        rep.emit(json.loads(line))
    full = cube.complexity_report(cube.twenty_round_rows())
    print(f"eight cubes at 20 rounds: time 2^{full.log2_time:.2f}, data 2^{full.log2_data:.2f}")
    rep.emit({"record": "complexity_20_rounds", "log2_time": full.log2_time,
              "log2_data": full.log2_data})
    if not result.true_key_survives:
        return EXIT_VERIFY
    return EXIT_VERIFY if failed else EXIT_OK


def selftest_checks(ineq_path=None, solver_cmd=None):
    """Yield (name, status, detail) with status PASS, FAIL or SKIP."""
    eq = all(field.trace(cipher.wgp(field.from_stage_bits(m))) ==
             cipher.ksg_anf([(m >> p) & 1 for p in range(7)]) for m in range(128))
    yield "filter equals keystream ANF on 128 inputs", eq, ""
    yield "WGP is a bijection", len(set(cipher.WGP_TABLE)) == 128, ""
    counts = divprop.linear_layer_counts(tables.linear_matrix("system"))
    cuts_ok = all(not divprop.linear_trail_valid(tables.linear_matrix("system"), *p)
                  for p in counts.invalid_patterns)
    yield ("linear layer: 626 copy/XOR patterns",
           counts.patterns == 626 and cuts_ok,
           f"{counts.invalid} invalid, {counts.valid} valid (published split 76/550)")
    yield ("linear layer: system and field matrices agree",
           bool((tables.linear_matrix("system") == tables.linear_matrix("field")).all()), "")
    rows = tables.load_inequalities(ineq_path)
    extra, missing = tables.inequality_mismatches(rows)
    bad_rows = sorted({r for _, _, fr in missing for r in fr})
    detail = f"{len(extra)} extra, {len(missing)} missing"
    if bad_rows:
        detail += f"; violated rows {bad_rows}"
    yield "21 inequalities match the WGP trail table", len(rows) == 21 and not extra and not missing, detail
    queries = [(3, (78, 79, 80), None), (4, (0, 36, 37, 73, 74, 75, 76), 77), (1, (), None)]
    backends = [milp.TrailBackend(), milp.ScipyBackend()]
    agree = all(len({b.solve(milp.build_wg7_eval(R, I, k)).status for b in backends}) == 1
                for R, I, k in queries)
    yield "trail engine and scipy MILP agree", agree, f"{len(queries)} queries"
    if solver_cmd:
        try:
            be = milp.CommandBackend(solver_cmd)
            agree = all(be.solve(milp.build_wg7_eval(R, I, k)).status ==
                        backends[0].solve(milp.build_wg7_eval(R, I, k)).status
                        for R, I, k in queries)
            yield "external solver agrees", agree, solver_cmd
        except milp.BackendUnavailable as e:
            yield "external solver agrees", None, str(e)
    else:
        yield "external solver agrees", None, "no solver configured"


def cmd_selftest(args, rep):
    failed = 0
    for name, ok, detail in selftest_checks(args.inequalities, args.solver_cmd):
        tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        failed += ok is False
        print(f"{tag} {name}" + (f" ({detail})" if detail else ""))
        rep.emit({"record": "selftest", "check": name, "status": tag, "detail": detail})
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {
    "keystream": cmd_keystream,
    "model": cmd_model,
    "extract-j": cmd_extract_j,
    "attack": cmd_attack,
    "selftest": cmd_selftest,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.workers < 1:
        print("usage error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    # for ``model`` the --out path is the LP file, so no JSON report is written
    rep = Reporter(args, None if args.command == "model" else args.out)
    try:
        return COMMANDS[args.command](args, rep)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except trail.BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        rep.emit({"record": "budget_exceeded", "detail": str(e)})
        return EXIT_BUDGET
    except milp.BackendUnavailable as e:
        print(f"solver unavailable: {e}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    finally:
        rep.close()


if __name__ == "__main__":
    sys.exit(main())
