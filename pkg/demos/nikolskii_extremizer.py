"""Where does a unit-L_2 trial function get tallest?

The sup-over-L_2 ratio has a closed form on a grid: the largest value of
sqrt(k_y^T M^{-1} k_y).  Printing the maximiser shows that the peak sits at
the boundary, where the trial space has the fewest neighbours to cancel
against.

    python demos/nikolskii_extremizer.py
"""

import numpy as np

from kerninv import Box, Interval, MaternKernel, TrialSpace, build_rule, nikolskii_constant, uniform_refinement

for host, m, levels in ((Interval(), 2.0, range(3, 8)), (Box(), 2.5, range(2, 5))):
    d = host.dim
    print(f"\n{type(host).__name__}, m = {m:g}")
    print(f"{'N':>5} {'h':>9} {'sup/L2':>9} {'* h^(d/2)':>10}  argmax")
    for level in levels:
        space = TrialSpace(MaternKernel(m, d), uniform_refinement(host, level))
        est = nikolskii_constant(space, build_rule(host, level + (2 if d == 1 else 0)))
        where = np.round(est.diagnostics["argmax"], 4)
        print(f"{est.N:5d} {est.h:9.5f} {est.value:9.3f} {est.constant:10.4f}  {where}")
