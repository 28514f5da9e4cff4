"""
Involved key bits from division trails
======================================

A key bit can appear in the superpoly of a cube only if a division trail
leads from (cube bits + that key bit) to the first keystream bit.  The
built-in trail search answers this per key bit; the same question can be
posed as a MILP feasibility model.
"""

import time

from wg7cube import cube, milp, trail

I1, R = cube.CUBES["I1"]

t0 = time.perf_counter()
J = trail.involved_keys(R, I1)
print(f"R={R}, cube {trail.format_indices(I1)}: J = {trail.format_indices(J)} "
      f"(|J| = {len(J)}, {time.perf_counter() - t0:.1f} s)")

# a witness trail for key bit 0, printed as the weight per round
path = trail.TrailEngine().find_trail(trail.RoundSpec(R, I1, (0,)))
print("trail weights:", [bin(k).count("1") for k in path])
print("trail replays:", trail.check_trail(path))

# the same query as a 0/1 program, solved with HiGHS through scipy
m = milp.build_wg7_eval(R, I1, key_bit=0)
print(f"model: {m.num_vars()} variables, {m.num_constraints()} constraints")
res = milp.solve(m, milp.ScipyBackend(time_limit=120))
print(f"scipy backend: {res.status.value} in {res.seconds:.1f} s")

# the model grows linearly with the round count
fit = milp.round_count_fit(sizes=range(1, 21))
print("variables = {}R + {}, constraints = {}R + {}".format(*fit["vars"], *fit["constraints"]))
