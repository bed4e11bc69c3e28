"""How fast can a kernel trial function oscillate?

Matérn translates on [0, 1] with uniform nodes.  For each grid we compute the
exact worst ratio ||u||_{H^s} / ||u||_{L_2} over the trial space and watch it
grow as the node spacing shrinks.

    python demos/bernstein_scaling.py
"""

import numpy as np

from kerninv import (Interval, MaternKernel, TrialSpace, bernstein_constant, build_rule,
                     fit_exponent, uniform_refinement)

host = Interval()
kernel = MaternKernel(2.0, 1)   # nu = 3/2, so H^2 is the native space

for s in (1.0, 2.0):
    print(f"\ns = {s:g}")
    print(f"{'N':>5} {'q':>10} {'ratio':>12} {'ratio * q^s':>12}")
    pairs = []
    for level in range(3, 8):
        space = TrialSpace(kernel, uniform_refinement(host, level))
        rule = build_rule(host, level + 2)   # two levels finer than the nodes
        est = bernstein_constant(space, s, rule)
        pairs.append((est.q, est.value))
        print(f"{est.N:5d} {est.q:10.5f} {est.value:12.4f} {est.constant:12.4f}")
    fit = fit_exponent(pairs)
    print(f"fitted exponent {fit.slope:.3f} (+- {fit.stderr:.3f}), expected {-s:g}")

# the extremizer is a node-scale oscillation; print its sign pattern at the nodes
space = TrialSpace(kernel, uniform_refinement(host, 4))
est = bernstein_constant(space, 1.0, build_rule(host, 6))
u = space.basis(space.centers) @ est.extremizer
print("\nsign of the s=1 extremizer at the 17 nodes:")
print("".join("+" if v > 0 else "-" for v in u))
