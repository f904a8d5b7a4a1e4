"""Star node: iterates, the near-identity map and the curvature of trajectories.

Every solution of a planar star node leaves along a straight line at first
order.  The second-order term of the relation between the coordinates tells
whether the trajectory bends towards or away from that line.
"""

import numpy as np

from sinkasym.iterates import iterate, psi_closely
from sinkasym.numeric import flow, psi_numeric
from sinkasym.relate import concavity_sign, relate_star, star_xi
from sinkasym.validation import star_system

sys_ = star_system()
print(sys_.describe(), "\n")

x0 = np.array([0.05, 0.05])
y0 = psi_numeric(sys_, x0, tol=1e-12)
print("asymptotic parameters psi(x0) =", y0)

its = iterate(sys_, 4)
tr = flow(sys_, x0, 6.0, rtol=1e-12, atol=1e-300, radius=None)
print("\n  m   |x(t) - D_m(t)| at t = 2, 4, 6")
for m in range(1, 5):
    errs = [np.max(np.abs(tr(t) - its.evaluate_original(m, t, y0))) for t in (2, 4, 6)]
    print(f"  {m}   " + "  ".join(f"{e:.2e}" for e in errs))

ps = psi_closely(sys_, 5)
small = x0 / 5
ref = psi_numeric(sys_, small, tol=1e-14)
print("\npsi_m(x0/5) against the numeric map:")
for m in range(1, 6):
    print(f"  m = {m}: {np.max(np.abs(ps(small, m) - ref)):.2e}")

xi = star_xi(sys_)
for point in ((0.05, 0.05), (0.02, 0.06)):
    rel = relate_star(xi, psi_numeric(sys_, point, tol=1e-12))
    side = {1: "convex", -1: "concave", 0: "straight"}[concavity_sign(rel.coefficient(2))]
    print(f"\nfrom x0 = {point}: {rel.format({0: 'x1', 1: 'x2'})}  ({side})")
