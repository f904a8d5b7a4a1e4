"""A system whose linearizing map is a polynomial.

For x1' = -x1, x2' = -2 x2 - x1^3 the map psi(x) = (x1, x2 + x1^3) turns the
flow into the linear one exactly, so every iterate from the second on carries
the same correction and the numeric map agrees to integration accuracy.
"""

import numpy as np

from sinkasym.iterates import psi_closely
from sinkasym.numeric import flow, psi_numeric
from sinkasym.validation import cubic_system

sys_ = cubic_system()
ps = psi_closely(sys_, 4)
for m in range(1, 5):
    print(f"psi_{m}:", ", ".join(p.format() for p in ps.psi(m)))

x0 = np.array([0.1, 0.05])
print("\npsi_numeric(x0) =", psi_numeric(sys_, x0, tol=1e-12), " exact:", [0.1, 0.051])

# conjugacy: psi(phi_t(x0)) = exp(tA) psi(x0)
y0 = ps(x0, 4)
for t in (0.5, 1.0, 2.0):
    xt = flow(sys_, x0, t, rtol=1e-12, atol=1e-16).final
    lhs = ps(xt, 4)
    rhs = np.exp([-t, -2 * t]) * y0
    print(f"t = {t}: |psi(x(t)) - e^(tA) psi(x0)| = {np.max(np.abs(lhs - rhs)):.1e}")
