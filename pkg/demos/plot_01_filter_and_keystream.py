"""
The WG-7 filter and keystream
=============================

The keystream bit is a 50-monomial Boolean function of stage 22.  Here we
check that it equals the trace of the WG permutation, then run the cipher.
"""

from wg7cube import cipher, divprop, field

# every stage value, read as a field element, goes through WGP and the trace
agree = sum(
    field.trace(cipher.wgp(field.from_stage_bits(m))) == cipher.ksg_anf([(m >> p) & 1 for p in range(7)])
    for m in range(128)
)
print(f"trace(WGP) matches the filter ANF on {agree}/128 inputs")

# the Mobius transform recovers the monomial list from the truth table
truth = [cipher.FILTER_TABLE[field.from_stage_bits(m)] for m in range(128)]
anf = divprop.anf_monomials(truth)
print(f"filter ANF in stage coordinates has {len(anf)} monomials "
      f"(KSG_MONOMIALS: {len(cipher.KSG_MONOMIALS)})")

# 46 initialization rounds, then 32 keystream bits
key = cipher.parse_key("0123456789abcdef0123")
iv = cipher.parse_iv("01" * 40 + "1")
print("keystream:", "".join(map(str, cipher.keystream(key, iv, n=32))))

# reduced rounds are the object of study below
for R in (0, 8, 14, 20):
    print(f"R={R:2d}:", "".join(map(str, cipher.keystream(key, iv, R, 16))))
