"""Transition rates, the cooperative parameter and long-term classes.

A branching process with interactions jumps from n by linear events
(death d, litters pi_i), pair events (competition c, annihilation a,
cooperation b_i, each per unordered pair) and catastrophes driven by
atoms (y, w): each individual is hit with probability y, and the hits
merge into one survivor.
"""

from branchdual import (
    InteractionParams,
    classify_long_term,
    classify_regime,
    derive,
    drift_at,
    transition_rates,
)

p = InteractionParams(d=1, pi={1: 2}, c=3, a=1, b={1: 4}, lam=[(0.5, 1.0)])
for n in range(5):
    print(f"n={n}: rates {transition_rates(n, p)}  drift {drift_at(n, p):+.2f}")

# The sign of sigma = -c - 2a + sum_i i b_i splits the regimes.
for q in (
    InteractionParams(c=3, a=1, b={1: 2, 2: 1}),
    InteractionParams(c=1, b={1: 1}),
    InteractionParams(c=1, b={1: 3}),
):
    print(f"sigma={derive(q).sigma_coop:+.1f}  {classify_regime(q).value}")

# Long-term behaviour needs the subcritical regime.
print(classify_long_term(InteractionParams(pi={1: 1}, c=2, b={1: 1})).value)
print(classify_long_term(InteractionParams(a=1, pi={2: 1}, b={2: 0.5}), "odd").value)
