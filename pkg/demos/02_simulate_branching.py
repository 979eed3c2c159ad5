"""Exact simulation of Z: a single path, batches, hitting times, explosion."""

import math

import numpy as np

from branchdual import InteractionParams, make_rng, mc_generating_function, simulate_z, simulate_z_batch
from branchdual.ctmc import CAPPED

coop = InteractionParams(pi={1: 1}, c=2, b={1: 1}, lam=[(0.5, 0.4)])
path = simulate_z(coop, 20, horizon=2.0, rng=make_rng(0, "path"))
print(f"{path.times.size - 1} events; Z at t=0.1, 1, 2: "
      f"{[path.state_at(t) for t in (0.1, 1.0, 2.0)]}; outcome {path.outcome.kind}")

# Pure death from 3: absorption time has mean 1 + 1/2 + 1/3.
death = InteractionParams(d=1)
res = simulate_z_batch(death, 3, 10**5, horizon=50.0, rng=make_rng(0, "death"))
print(f"mean absorption time {res.final_time.mean():.4f} (exact {11 / 6:.4f})")

# Binomial thinning: E_2[x^Z_t] = (1 - e^-t (1 - x))^2.
est = mc_generating_function(death, 2, math.log(2), 0.5, 10**5, rng=make_rng(0, "gf"))
print(f"E[0.5^Z] = {est.mean:.4f} +- {est.std_err:.4f} (exact 0.5625)")

# Supercritical cooperation: paths pass any cap in finite time.
boom = InteractionParams(b={1: 3}, c=1)
res = simulate_z_batch(boom, 10, 500, horizon=5.0, cap=10**4, rng=make_rng(0, "boom"))
print(f"capped fraction {np.mean(res.outcome == CAPPED):.3f}")
