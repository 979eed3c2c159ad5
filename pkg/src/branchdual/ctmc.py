"""Exact (Gillespie) simulation of the interacting branching process.

Two engines share the rates of :mod:`branchdual.model`:

* :func:`simulate_z` follows a single trajectory event by event using the
  merged table from :func:`~branchdual.model.transition_rates` and keeps the
  whole path.
* :func:`simulate_z_batch` advances many independent replicates at once,
  sampling the reaction channel first (birth of size i, death/competition,
  annihilation, catastrophe from atom j) and recording only snapshots,
  hitting times and outcomes. Both produce the same law.

Paths that exceed ``cap`` before the horizon are reported as capped; this
is how explosion shows up in finite simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.stats import binom

from .model import InteractionParams, transition_rates
from .rng import as_rng

__all__ = [
    "Outcome",
    "PathZ",
    "MCEstimate",
    "BatchResult",
    "GeneratorMatrix",
    "HitResult",
    "simulate_z",
    "simulate_z_batch",
    "hitting_time",
    "hitting_times",
    "mc_generating_function",
    "build_generator",
]

ABSORBED, TIMED_OUT, CAPPED, HIT = 0, 1, 2, 3
OUTCOME_NAMES = {ABSORBED: "absorbed", TIMED_OUT: "timed_out", CAPPED: "capped", HIT: "hit"}


@dataclass(frozen=True)
class Outcome:
    kind: str  # "absorbed", "timed_out" or "capped"
    state: int
    time: float


@dataclass(frozen=True)
class PathZ:
    times: np.ndarray
    states: np.ndarray
    outcome: Outcome

    def state_at(self, t: float) -> int:
        """State of the right-continuous path at time ``t``."""
        if t < 0:
            raise ValueError("t must be >= 0")
        return int(self.states[np.searchsorted(self.times, t, side="right") - 1])


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_err: float
    replicates: int
    capped_fraction: float = 0.0
    bias_bound: float = 0.0

    @classmethod
    def from_samples(cls, values, capped_fraction: float = 0.0, bias_bound: float = 0.0):
        values = np.asarray(values, dtype=float)
        r = values.size
        if r == 0:
            raise ValueError("need at least one replicate")
        if np.all(values == values[0]):
            return cls(float(values[0]), 0.0, r, float(capped_fraction), float(bias_bound))
        mean = float(values.mean())
        se = float(values.std(ddof=1) / math.sqrt(r)) if r > 1 else 0.0
        return cls(mean, se, r, float(capped_fraction), float(bias_bound))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_err": self.std_err,
            "replicates": self.replicates,
            "capped_fraction": self.capped_fraction,
            "bias_bound": self.bias_bound,
        }


def simulate_z(
    params: InteractionParams,
    n0: int,
    horizon: float,
    cap: int = 10**4,
    rng=None,
) -> PathZ:
    """Simulate one trajectory on ``[0, horizon]`` with every event kept."""
    if n0 < 0 or horizon <= 0 or cap <= n0:
        raise ValueError("need n0 >= 0, horizon > 0 and cap > n0")
    rng = as_rng(rng)
    t, n = 0.0, int(n0)
    times, states = [0.0], [n]
    while True:
        rates = transition_rates(n, params)
        if not rates:
            outcome = Outcome("absorbed", n, t)
            break
        targets = np.array([j for j, _ in rates])
        r = np.array([q for _, q in rates])
        total = r.sum()
        t_next = t + rng.exponential(1.0 / total)
        if t_next > horizon:
            outcome = Outcome("timed_out", n, horizon)
            break
        cum = np.cumsum(r)
        n = int(targets[min(np.searchsorted(cum, rng.random() * total, side="right"), len(r) - 1)])
        t = t_next
        times.append(t)
        states.append(n)
        if n > cap:
            outcome = Outcome("capped", n, t)
            break
    return PathZ(np.array(times), np.array(states, dtype=np.int64), outcome)


@dataclass
class BatchResult:
    """Per-replicate summary from :func:`simulate_z_batch`.

    ``snapshots[s, r]`` is ``Z`` at ``snapshot_times[s]`` for replicate ``r``
    or -1 if that replicate was capped before then.
    """

    snapshot_times: np.ndarray
    snapshots: np.ndarray
    outcome: np.ndarray
    final_state: np.ndarray
    final_time: np.ndarray
    hit_time: np.ndarray
    parity_kept: np.ndarray
    events: np.ndarray

    @property
    def replicates(self) -> int:
        return self.outcome.size

    @property
    def capped(self) -> np.ndarray:
        return self.outcome == CAPPED

    @property
    def capped_fraction(self) -> float:
        return float(self.capped.mean())


class _Channels:
    """Vectorised channel rates for a parameter set."""

    def __init__(self, params: InteractionParams):
        self.sizes = np.array(params.litter_sizes, dtype=np.int64)
        pi, b = params.pi_dict, params.b_dict
        self.pi = np.array([pi.get(i, 0.0) for i in self.sizes])
        self.b = np.array([b.get(i, 0.0) for i in self.sizes])
        self.d, self.c, self.a = params.d, params.c, params.a
        self.ys = params.lam.locations
        self.intens = params.lam.jump_intensities
        self.n_birth = self.sizes.size
        self.n_cols = self.n_birth + 2 + self.ys.size

    def rates(self, n: np.ndarray) -> np.ndarray:
        nf = n.astype(float)
        pairs = nf * (nf - 1.0) / 2.0
        out = np.empty((n.size, self.n_cols))
        nb = self.n_birth
        if nb:
            out[:, :nb] = nf[:, None] * self.pi + pairs[:, None] * self.b
        out[:, nb] = self.d * nf + self.c * pairs
        out[:, nb + 1] = self.a * pairs
        for j, (y, lam) in enumerate(zip(self.ys, self.intens)):
            q = 1.0 - y
            # P(Binom(n, y) >= 2)
            p2 = 1.0 - q**nf - nf * y * q ** np.maximum(nf - 1.0, 0.0)
            out[:, nb + 2 + j] = lam * np.clip(p2, 0.0, None) * (n >= 2)
        return out

    def jumps(self, n: np.ndarray, ch: np.ndarray, rng) -> np.ndarray:
        nb = self.n_birth
        delta = np.zeros(n.size, dtype=np.int64)
        birth = ch < nb
        delta[birth] = self.sizes[ch[birth]]
        delta[ch == nb] = -1
        delta[ch == nb + 1] = -2
        cat = ch >= nb + 2
        if cat.any():
            idx = np.flatnonzero(cat)
            y = self.ys[ch[idx] - nb - 2]
            nn = n[idx]
            lo = binom.cdf(1, nn, y)
            q = lo + rng.random(idx.size) * (1.0 - lo)
            k = binom.ppf(q, nn, y)
            k = np.clip(np.nan_to_num(k, nan=2.0), 2, nn).astype(np.int64)
            delta[idx] = -(k - 1)
        return delta


def simulate_z_batch(
    params: InteractionParams,
    n0: int,
    replicates: int,
    *,
    horizon: float | None = None,
    snapshot_times=(),
    cap: int = 10**4,
    target=None,
    stop_on_hit: bool = False,
    rng=None,
) -> BatchResult:
    """Advance ``replicates`` independent copies of ``Z`` from ``n0``.

    The run ends at ``horizon`` (default: the last snapshot time). When a
    ``target`` set is given, the first entrance time is recorded in
    ``hit_time`` (``inf`` if never), and ``stop_on_hit`` ends a replicate
    there.
    """
    rng = as_rng(rng)
    snap = np.asarray(snapshot_times, dtype=float)
    if snap.size and (np.any(np.diff(snap) < 0) or snap[0] < 0):
        raise ValueError("snapshot_times must be sorted and >= 0")
    if horizon is None:
        if not snap.size:
            raise ValueError("need a horizon or snapshot times")
        horizon = float(snap[-1])
    if n0 < 0 or cap <= n0 or replicates < 1:
        raise ValueError("need n0 >= 0, cap > n0 and replicates >= 1")
    ch = _Channels(params)
    targets = None if target is None else np.array(sorted(set(int(v) for v in target)), dtype=np.int64)

    R, S = int(replicates), snap.size
    n = np.full(R, int(n0), dtype=np.int64)
    t = np.zeros(R)
    snaps = np.full((S, R), -1, dtype=np.int64)
    next_snap = np.zeros(R, dtype=np.int64)
    outcome = np.full(R, -1, dtype=np.int64)
    final_state = np.full(R, -1, dtype=np.int64)
    final_time = np.zeros(R)
    hit_time = np.full(R, np.inf)
    parity_kept = np.ones(R, dtype=bool)
    events = np.zeros(R, dtype=np.int64)
    parity0 = int(n0) % 2

    active = np.arange(R)
    if targets is not None and np.isin(n0, targets):
        hit_time[:] = 0.0
        if stop_on_hit:
            outcome[:] = HIT
            final_state[:] = n0
            for s in range(S):
                if snap[s] <= 0.0:
                    snaps[s] = n0
            active = active[:0]

    def fill_snapshots(idx, values):
        for s in range(S):
            m = next_snap[idx] <= s
            snaps[s, idx[m]] = values[m]
        next_snap[idx] = S

    while active.size:
        na = n[active]
        rates = ch.rates(na)
        total = rates.sum(axis=1)

        dead = total <= 0.0
        if dead.any():
            idx = active[dead]
            outcome[idx] = ABSORBED
            final_state[idx] = n[idx]
            final_time[idx] = t[idx]
            fill_snapshots(idx, n[idx])

        live = ~dead
        idx = active[live]
        rates, total, na = rates[live], total[live], na[live]
        t_new = t[idx] + rng.standard_exponential(idx.size) / total

        for s in range(S):
            m = (next_snap[idx] == s) & (t_new > snap[s])
            snaps[s, idx[m]] = na[m]
            next_snap[idx[m]] += 1

        late = t_new > horizon
        if late.any():
            j = idx[late]
            outcome[j] = TIMED_OUT
            final_state[j] = n[j]
            final_time[j] = horizon
            fill_snapshots(j, n[j])
        go = ~late
        idx, rates, total, na, t_new = idx[go], rates[go], total[go], na[go], t_new[go]

        cum = np.cumsum(rates, axis=1)
        u = rng.random(idx.size) * total
        chosen = np.minimum((cum <= u[:, None]).sum(axis=1), ch.n_cols - 1)
        n_new = na + ch.jumps(na, chosen, rng)
        n[idx] = n_new
        t[idx] = t_new
        events[idx] += 1
        parity_kept[idx] &= (n_new % 2) == parity0

        stop = np.zeros(idx.size, dtype=bool)
        if targets is not None:
            h = np.isin(n_new, targets) & np.isinf(hit_time[idx])
            hit_time[idx[h]] = t_new[h]
            if stop_on_hit and h.any():
                j = idx[h]
                outcome[j] = HIT
                final_state[j] = n_new[h]
                final_time[j] = t_new[h]
                fill_snapshots(j, n_new[h])
                stop |= h
        over = (n_new > cap) & ~stop
        if over.any():
            j = idx[over]
            outcome[j] = CAPPED
            final_state[j] = n_new[over]
            final_time[j] = t_new[over]
            fill_snapshots(j, np.full(j.size, -1, dtype=np.int64))
            stop |= over
        active = idx[~stop]

    return BatchResult(snap, snaps, outcome, final_state, final_time, hit_time, parity_kept, events)


@dataclass(frozen=True)
class HitResult:
    time: float  # inf unless status == "hit"
    status: str  # "hit", "timed_out", "capped" or "absorbed"


def hitting_time(params, n0, target_set, horizon, cap=10**4, rng=None) -> HitResult:
    """First entrance time of ``target_set`` along one simulated path."""
    res = simulate_z_batch(
        params, n0, 1, horizon=horizon, cap=cap, target=target_set, stop_on_hit=True, rng=rng
    )
    if np.isfinite(res.hit_time[0]):
        return HitResult(float(res.hit_time[0]), "hit")
    return HitResult(math.inf, OUTCOME_NAMES[int(res.outcome[0])])


def hitting_times(params, n0, target_set, horizon, replicates, cap=10**4, rng=None) -> BatchResult:
    """Batch version of :func:`hitting_time`; read ``hit_time`` off the result."""
    return simulate_z_batch(
        params, n0, replicates, horizon=horizon, cap=cap, target=target_set, stop_on_hit=True, rng=rng
    )


def gf_samples(res: BatchResult, x: float, s: int = -1) -> np.ndarray:
    z = res.snapshots[s]
    vals = np.power(float(x), np.where(z < 0, 0, z).astype(float))
    vals[z < 0] = 0.0
    return vals


def mc_generating_function(
    params: InteractionParams,
    n0: int,
    t: float,
    x: float,
    replicates: int,
    cap: int = 10**4,
    rng=None,
) -> MCEstimate:
    """Monte Carlo estimate of ``E_n[x ** Z_t]``.

    Capped paths contribute 0; ``bias_bound = x**cap * capped_fraction``.
    """
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return MCEstimate(float(x) ** n0, 0.0, int(replicates))
    res = simulate_z_batch(params, n0, replicates, snapshot_times=[t], horizon=t, cap=cap, rng=rng)
    cf = res.capped_fraction
    return MCEstimate.from_samples(gf_samples(res, x), cf, x**cap * cf)


@dataclass(frozen=True)
class GeneratorMatrix:
    n_max: int
    q: sp.csr_matrix

    def row_sums(self) -> np.ndarray:
        """Diagonal plus the correctly rounded sum of the off-diagonals, per row."""
        out = np.empty(self.n_max + 1)
        for i in range(self.n_max + 1):
            row = self.q.getrow(i)
            off = row.data[row.indices != i]
            out[i] = self.q[i, i] + math.fsum(off)
        return out

    def toarray(self) -> np.ndarray:
        return self.q.toarray()


def build_generator(params: InteractionParams, n_max: int) -> GeneratorMatrix:
    """Truncated generator on ``0..n_max``; jumps above ``n_max`` land on ``n_max``."""
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    rows, cols, vals = [], [], []
    for i in range(n_max + 1):
        merged: dict[int, list[float]] = {}
        for j, r in transition_rates(i, params):
            j = min(j, n_max)
            if j != i:
                merged.setdefault(j, []).append(r)
        off = {j: math.fsum(rs) for j, rs in merged.items()}
        for j, r in sorted(off.items()):
            rows.append(i)
            cols.append(j)
            vals.append(r)
        rows.append(i)
        cols.append(i)
        vals.append(-math.fsum(off.values()))
    q = sp.csr_matrix((vals, (rows, cols)), shape=(n_max + 1, n_max + 1))
    return GeneratorMatrix(n_max, q)
