"""Resonant eigenvalues: a logarithm enters the trajectory relation.

With eigenvalues a and 2a the quadratic part of the field feeds the fast
coordinate at exactly its own rate.  The trajectories then satisfy
x2 = (b211/a) x1^2 ln x1 + C x1^2 + ..., where only C depends on the
starting point.
"""

import numpy as np

from pathlib import Path

from sinkasym.numeric import fit_relation, flow, psi_numeric, sample_trajectory
from sinkasym.relate import relate_resonant
from sinkasym.system import load_system

sys_ = load_system(Path(__file__).parent / "data" / "resonant.json")
print(sys_.describe(), "\n")

print("symbolic relation:", relate_resonant(sys_).format({0: "x1", 1: "x2"}))
for x0 in ((0.05, 0.02), (0.04, 0.03)):
    y0 = psi_numeric(sys_, x0, tol=1e-13)
    rel = relate_resonant(sys_, y0)
    tr = flow(sys_, x0, 14.0, rtol=1e-13, atol=1e-300, radius=None)
    _, ys = sample_trajectory(tr, 6.0, 14.0, 400)
    # refit every coefficient from the late trajectory, with a cubic for the remainder
    fit = fit_relation(ys[:, 0], ys[:, 1], rel, fit_known=True, extra=((3, 0),))
    print(f"\nx0 = {x0}")
    print("  predicted:", rel.format({0: "x1", 1: "x2"}))
    print("  fitted:   ", {k: round(v, 6) for k, v in fit.params.items()})
