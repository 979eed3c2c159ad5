"""The [0, 1]-valued dual: Euler-Maruyama with exact catastrophe-jump times.

dX = mu(X) dt + sigma(X) dB + jumps, where
mu(x) = d (1 - x) + sum_i pi_i (x^{i+1} - x) and
sigma^2(x) = c x (1 - x) + sum_i b_i (x^{i+2} - x^2).
"""

import math

import numpy as np

from branchdual import InteractionParams, make_rng, mc_moment, mu_of_x, sigma2_of_x, simulate_x, simulate_x_batch

p = InteractionParams(pi={1: 1}, c=2, b={1: 1}, lam=[(0.5, 0.4)])
print(f"mu(0.5)={mu_of_x(0.5, p):+.3f}  sigma^2(0.5)={sigma2_of_x(0.5, p):.3f}")

path = simulate_x(p, 0.5, horizon=3.0, rng=make_rng(0, "x"))
print(f"path with {path.times.size} points ends at {path.values[-1]:.4f}")

# Pure drift: X_t = 1 - (1 - x) e^-t.
drift = simulate_x(InteractionParams(d=1), 0.5, horizon=1.0)
print(f"X at ln 2: {np.interp(math.log(2), drift.times, drift.values):.5f} (exact 0.75)")

# Without branching or death, X is a martingale.
xb = simulate_x_batch(InteractionParams(c=1, lam=[(0.5, 0.4)]), 0.3, 20000, [0.5, 1, 2], rng=make_rng(1))
print("means:", np.round(xb.values.mean(axis=1), 4), f"clamped steps {xb.clamp_fraction:.2e}")

print(mc_moment(p, 0.5, 1.0, 3, 20000, rng=make_rng(2)))
