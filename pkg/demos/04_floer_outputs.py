"""
From piercing sequences to Floer homology
=========================================

A certified piercing sequence determines the local chain complex near the
reducible critical points. Zero, two and four alternating crossings give
three different answers; anything else is rejected.
"""

from spinflow.floer import PiercingError, enumerate_spinc, piercing_to_floer, summary_table

for seq in ((), ("+", "-"), ("+", "-", "+", "-")):
    out = piercing_to_floer(seq)
    label = "(" + ",".join(seq) + ")"
    print(f"{label:12s} HM-to = {' + '.join(str(s) for s in out.hm_to):28s} local = {out.local_homology}")

try:
    piercing_to_floer(("+", "+", "-", "-"))
except PiercingError as exc:
    print("rejected:", exc)

# torsion of order 7: one self-conjugate structure and three conjugate pairs
structs = enumerate_spinc(7)
results = {s.k: (piercing_to_floer(("+", "-") if s.k == 0 else ()), s) for s in structs}
print(summary_table(results))
