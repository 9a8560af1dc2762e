"""
Test functions and their Fourier transforms
===========================================

The trace-formula test functions are convolution powers of an indicator,
optionally multiplied by x or by a cosine. Their transforms are powers of
sinc, which is what makes every spectral-side quantity explicit.
"""

import numpy as np

from spinflow.testfn import TestFunction, certified_min, regularity_norm

# H6 is even with transform sinc^6; K7 carries the odd prefactor x
H6 = TestFunction(6)
K7 = TestFunction.parse("conv7_x")
print(H6.id, "support", H6.support_radius, " H6(0) =", float(H6.value(0.0)))

# the real profile of K7 is (sinc^7)', negative just to the right of 0
t = np.array([0.05, 0.5, 1.0, 2.0])
print("(sinc^7)'(t) =", K7.profile(t))
print("(sinc^7)''(0) =", float(K7.profile_deriv(0.0, 1)))

# the modulated family enters the local Weyl window counts
for nu in (0.0, 1.0, 3.0):
    print(f"-H''_6,{nu}(0) = {-TestFunction(6, nu).second_deriv_at_zero():.6f}")

# certified minima of sinc^6 feed the window bounds
print("min sinc^6 on [0, 1/2]     >=", round(certified_min(H6, 0.0, 0.5), 5))
print("min sinc^6 on [0, 0.04715] >=", round(certified_min(H6, 0.0, 0.04715), 5))

# the weighted regularity norm is finite for K7 once delta exceeds 2.5
print("regularity norm of K7 at delta 2.6:", regularity_norm(K7, 2.6))
