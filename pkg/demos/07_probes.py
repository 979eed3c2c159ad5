"""Long-term probes: coming down from infinity, explosion, parity, mixing."""

from branchdual import (
    InteractionParams,
    cdi_probe,
    explosion_probe,
    parity_probe,
    uniform_convergence_probe,
)

geom = InteractionParams(pi={1: 1}, c=2, b={1: 1})
for rep in (
    cdi_probe(geom, replicates=2000),
    explosion_probe(InteractionParams(b={1: 3}, c=1), replicates=500),
    explosion_probe(geom, replicates=500),
    parity_probe(InteractionParams(a=1, b={2: 0.5}), 6, replicates=2000),
    parity_probe(InteractionParams(a=1, pi={2: 1}, b={2: 0.5}), 7, horizon=20.0, replicates=2000),
    uniform_convergence_probe(geom, replicates=20000),
):
    print(f"[{rep.probe}] verdict={rep.verdict}: {rep.summary}")
