"""Fixation of the dual: probabilities, expected times and the entropy bound."""

import math

import numpy as np

from branchdual import (
    InteractionParams,
    fixation_batch,
    fixation_probability,
    fixation_time_bound,
    fixation_time_green,
    make_rng,
)

mart = InteractionParams(c=1)
fb = fixation_batch(mart, 0.5, 5000, horizon=50.0, rng=make_rng(0, "fix"))
print(f"P(fix at 1) {np.mean(fb.boundary == 1):.3f}, mean time {fb.time.mean():.4f}, "
      f"Green {fixation_time_green(mart, 0.5):.5f}, 2 ln 2 = {2 * math.log(2):.5f}")

for b in ({}, {1: 0.5}):
    p = InteractionParams(c=1, b=b)
    print(f"b={b}: Green {fixation_time_green(p, 0.3):.4f} <= bound {fixation_time_bound(0.3, 1, b):.4f}")

geom = InteractionParams(pi={1: 1}, c=2, b={1: 1})
print(f"P_0.5(fix at 1) = {fixation_probability(geom, 0.5):.6f} (closed form 1/3)")
