"""Discrete pre-limit: resampling with an efficiency-dependent population size.

Each generation draws Binomial(N_x, x) / N_x with N_x = floor(N / (1 - b1 x)),
so the one-step variance is about x (1 - x) (1 - b1 x) / N.
"""

import numpy as np

from branchdual import make_rng, simulate_wf_efficiency, wf_efficiency_step

N, b1, x = 10**4, 0.5, 0.4
step = wf_efficiency_step(N, b1, np.full(10**5, x), make_rng(0))
print(f"variance {step.var(ddof=1):.4e} vs {x * (1 - x) * (1 - b1 * x) / N:.4e}, mean {step.mean():.5f}")
path = simulate_wf_efficiency(200, b1, 0.5, 400, make_rng(1))
print("frequency every 50 generations:", np.round(path[::50], 3))
