"""Trial spaces on the unit circle and the thin annulus around it.

Extending a circle function constantly along normals gives a band function
whose L_2 norm is exactly sqrt(2 delta) times the circle norm.  For kernel
trial functions the same comparison holds in H^beta up to a bounded factor,
as long as the band width is tied to the node separation.

    python demos/circle_band.py
"""

import math

import numpy as np

from kerninv import (Circle, MaternKernel, PointSet, TrialSpace, equivalence_ratio_extension,
                     manifold_bernstein_constant, restrict, trial_equivalence_ratio)
from kerninv.manifold import coupled_delta


def on_angle(f):
    return lambda p: f(np.arctan2(p[:, 1], p[:, 0]))


print("band identity, ||u o R||_band / (sqrt(2 delta) ||u||_circle)")
for delta in (0.2, 0.1, 0.05):
    r = equivalence_ratio_extension(on_angle(lambda t: np.cos(3 * t) + 0.5), delta)
    print(f"  delta = {delta:<5} ratio = {r:.15f}")

kernel = restrict(MaternKernel(2.5, 2), Circle())   # tau = 2 on the circle
rng = np.random.default_rng(0)
print("\nN   delta    H^0 ratio  H^1 ratio  Bernstein(beta=1)")
for n in (16, 32, 64):
    theta = 2 * math.pi * np.arange(n) / n
    space = TrialSpace(kernel, PointSet(Circle.embed(theta), Circle()))
    delta = coupled_delta(space, 0.25)
    c = rng.standard_normal(n)
    r0 = trial_equivalence_ratio(space, c, delta, 0)
    r1 = trial_equivalence_ratio(space, c, delta, 1)
    b = manifold_bernstein_constant(space, 1.0).value
    print(f"{n:<3} {delta:.4f}   {r0:.4f}     {r1:.4f}     {b:.3f}")
