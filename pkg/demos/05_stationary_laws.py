"""Stationary laws of Z three ways: sparse solve, closed form, scale function.

With pi = {1: rho}, b = {1: b1}, competition c, the generating function of
the stationary law equals the probability that the dual fixes at 1.
"""

import numpy as np

from branchdual import InteractionParams, scale_function, stationary_closed_form, stationary_numeric

xs = np.linspace(0.1, 0.9, 9)
for rho, b1, c in [(1, 1, 2), (1, 2, 4), (2, 1, 3)]:
    p = InteractionParams(pi={1: rho}, b={1: b1}, c=c)
    num = stationary_numeric(p, 400)
    cf = stationary_closed_form(rho, b1, c)
    gap_cf = np.max(np.abs(num.gf(xs) - cf.gf(xs)))
    gap_s = np.max(np.abs(num.gf(xs) - scale_function(p).ratio(xs)))
    print(f"rho={rho} b1={b1} c={c}: mu(1)={num.pmf(1):.5f}  |num-closed|={gap_cf:.1e}  |num-scale|={gap_s:.1e}")

# The first case is geometric with parameter 1/2.
print(np.round(stationary_numeric(InteractionParams(pi={1: 1}, b={1: 1}, c=2), 200).probs[:5], 6))

# Annihilation with even jumps only keeps parity; odd starts have their own law.
odd = stationary_numeric(InteractionParams(a=1, pi={2: 1}, b={2: 0.5}), 301, start_parity="odd")
print("odd-parity law:", [(k, round(q, 4)) for k, q in odd.rows()[:8] if q > 0])
