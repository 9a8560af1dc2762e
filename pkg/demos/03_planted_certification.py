"""
Certifying a planted spectral flow
==================================

In oracle mode the geometric side is replaced by the spectral side of a
planted spectrum, so every certified statement can be compared with the
truth. Here one eigenvalue branch crosses zero twice as tau goes round.
"""

import numpy as np

from spinflow.eigcert import BoundBasis, J_grid, build_A
from spinflow.pipeline import certify_structure
from spinflow.synthetic import planted_instance

sp, truth = planted_instance(1, 2)
print("planted crossings:", [(round(t, 4), s) for t, s in truth.crossings()])

# J_0(tau) >= 1 wherever an eigenvalue could sit at zero
A = build_A(sp, BoundBasis.default(7.0))
taus = np.linspace(0.0, 1.0, 400, endpoint=False)
j0 = J_grid(A, taus, 0, [0.0])[:, 0]
print("tau where J_0 >= 1:", taus[j0 >= 1].round(3))

res = certify_structure(sp, 0)
print("status:", res.status)
for c in res.crossings:
    print(f"  crossing in [{c.interval[0]:.4f}, {c.interval[1]:.4f}] with sign {c.sign:+d}")
print("piercing:", res.piercing, " local Floer homology:", res.floer.local_homology)
