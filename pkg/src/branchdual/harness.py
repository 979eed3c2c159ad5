"""Monte Carlo checks of duality and long-term behaviour.

Every check returns a report object carrying its estimates, standard errors
and a verdict. Verdicts use z-scores (|difference| / combined SE) and
total-variation thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import Distribution, empirical_distribution, stationary_numeric
from .ctmc import ABSORBED, MCEstimate, gf_samples, hitting_times, simulate_z_batch
from .dual import DEFAULT_DT, DualUndefinedError, simulate_x_batch
from .io import digest
from .model import (
    InteractionParams,
    LongTermClass,
    classify_long_term,
    derive,
    params_to_dict,
)
from .rng import make_rng

__all__ = [
    "STANDARD_MODELS",
    "DualityReport",
    "ProbeReport",
    "duality_check",
    "duality_grid",
    "grid_verdict",
    "cdi_probe",
    "explosion_probe",
    "parity_probe",
    "uniform_convergence_probe",
]

STANDARD_MODELS: dict[str, InteractionParams] = {
    "pure-death": InteractionParams(d=1.0),
    "logistic": InteractionParams(pi={1: 1.0}, c=1.0),
    "braco": InteractionParams(pi={1: 1.0}, c=1.0, d=0.5),
    "cooperative": InteractionParams(pi={1: 1.0}, c=2.0, b={1: 1.0}),
    "catastrophic": InteractionParams(pi={1: 1.0}, c=2.0, b={1: 1.0}, lam=[(0.5, 0.4)]),
}


def _z(a: MCEstimate, b: MCEstimate) -> float:
    se = math.hypot(a.std_err, b.std_err)
    diff = abs(a.mean - b.mean)
    if se == 0.0:
        return 0.0 if diff <= 1e-15 else math.inf
    return diff / se


@dataclass
class DualityReport:
    """Both sides of ``E_x[X_t^n] = E_n[x^{Z_t}]`` for one ``(x, n, t)`` cell."""

    x: float
    n: int
    t: float
    lhs: MCEstimate
    rhs: MCEstimate
    dt_bias: float = 0.0
    label: str = ""

    @property
    def z_score(self) -> float:
        return _z(self.lhs, self.rhs)

    @property
    def combined_se(self) -> float:
        return math.hypot(self.lhs.std_err, self.rhs.std_err)

    @property
    def verdict(self) -> bool:
        se = self.combined_se
        biases_ok = (self.dt_bias <= se and self.rhs.bias_bound <= se) if se > 0 else True
        return self.z_score <= 3.0 and biases_ok

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "x": self.x,
            "n": self.n,
            "t": self.t,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "z_score": self.z_score,
            "dt_bias": self.dt_bias,
            "verdict": self.verdict,
        }


def _check_dual_params(params: InteractionParams):
    if params.a > 0:
        raise DualUndefinedError("duality check needs a = 0: the annihilation dual is not implemented")
    if derive(params).sigma_coop > 0:
        raise DualUndefinedError("duality check needs sigma_coop <= 0")


def _coarse_ok(times, dt) -> bool:
    k = np.asarray(times, dtype=float) / (2 * dt)
    return bool(np.all(np.abs(k - np.rint(k)) < 1e-9))


def _lhs_cells(xb, n, s):
    fine = np.power(xb.values[s], n)
    est = MCEstimate.from_samples(fine)
    bias = 0.0
    if xb.coarse_values is not None:
        bias = abs(est.mean - float(np.power(xb.coarse_values[s], n).mean()))
    return est, bias


def duality_check(
    params: InteractionParams,
    x: float,
    n: int,
    t: float,
    replicates: int = 10**5,
    dt: float = DEFAULT_DT,
    seed: int = 0,
    cap: int = 10**4,
) -> DualityReport:
    """Estimate both sides of the moment duality from independent streams.

    ``dt_bias`` is the gap between the Euler path and a coupled path with
    step ``2 dt``, a proxy for the discretisation bias.
    """
    _check_dual_params(params)
    if not (0.0 <= x <= 1.0) or n < 0 or t < 0:
        raise ValueError("need x in [0, 1], n >= 0, t >= 0")
    if t == 0:
        exact = MCEstimate(float(x) ** n, 0.0, replicates)
        return DualityReport(x, n, t, exact, exact)
    xb = simulate_x_batch(
        params, x, replicates, [t], dt=dt, rng=make_rng(seed, "dual", "x"), coarse=_coarse_ok([t], dt)
    )
    lhs, bias = _lhs_cells(xb, n, 0)
    zb = simulate_z_batch(params, n, replicates, snapshot_times=[t], cap=max(cap, n + 1), rng=make_rng(seed, "dual", "z"))
    cf = zb.capped_fraction
    rhs = MCEstimate.from_samples(gf_samples(zb, x, 0), cf, x**cap * cf)
    return DualityReport(x, n, t, lhs, rhs, bias)


def duality_grid(
    models: dict[str, InteractionParams] | None = None,
    xs=(0.2, 0.5, 0.8),
    ns=(1, 2, 5),
    ts=(0.5, 1.0, 2.0),
    replicates: int = 10**5,
    dt: float = DEFAULT_DT,
    seed: int = 0,
    cap: int = 10**4,
    z_side: dict[str, InteractionParams] | None = None,
) -> list[DualityReport]:
    """Duality check over a grid, reusing paths across cells.

    One batch of dual paths serves every ``(n, t)`` for a given ``x``; one
    batch of branching paths serves every ``(x, t)`` for a given ``n``.
    ``z_side`` optionally replaces the branching-process parameters of a
    model (negative controls).
    """
    models = STANDARD_MODELS if models is None else models
    z_side = z_side or {}
    ts = tuple(float(t) for t in ts)
    coarse = _coarse_ok(ts, dt)
    out = []
    for name, params in models.items():
        _check_dual_params(params)
        zp = z_side.get(name, params)
        xbs = {
            i: simulate_x_batch(params, x, replicates, ts, dt=dt, rng=make_rng(seed, "grid", name, "x", i), coarse=coarse)
            for i, x in enumerate(xs)
        }
        zbs = {
            j: simulate_z_batch(zp, n, replicates, snapshot_times=ts, cap=max(cap, n + 1), rng=make_rng(seed, "grid", name, "z", j))
            for j, n in enumerate(ns)
        }
        for i, x in enumerate(xs):
            for j, n in enumerate(ns):
                for s, t in enumerate(ts):
                    lhs, bias = _lhs_cells(xbs[i], n, s)
                    zb = zbs[j]
                    cf = float((zb.snapshots[s] < 0).mean())
                    rhs = MCEstimate.from_samples(gf_samples(zb, x, s), cf, x**cap * cf)
                    out.append(DualityReport(x, n, t, lhs, rhs, bias, label=name))
    return out


def grid_verdict(reports: list[DualityReport], z_max: float = 5.0, z_warn: float = 3.0, allowed: int = 1) -> bool:
    """Every cell below ``z_max`` and at most ``allowed`` cells above ``z_warn``."""
    z = [r.z_score for r in reports]
    return max(z, default=0.0) <= z_max and sum(v > z_warn for v in z) <= allowed


@dataclass
class ProbeReport:
    probe: str
    params: InteractionParams
    seed: int
    cells: list[dict] = field(default_factory=list)
    verdict: bool | None = None
    summary: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        pd = params_to_dict(self.params)
        return {
            "probe": self.probe,
            "params": pd,
            "params_digest": digest(pd),
            "seed": self.seed,
            "cells": self.cells,
            "verdict": self.verdict,
            "summary": self.summary,
            **self.extra,
        }


def _se_mean(v: np.ndarray) -> tuple[float, float]:
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0


def cdi_probe(
    params: InteractionParams,
    n_list=(10, 100, 1000),
    horizon: float = 1000.0,
    replicates: int = 10**4,
    seed: int = 0,
    n_max: int = 400,
) -> ProbeReport:
    """Mean hitting time of state 1 from increasingly large starts.

    Passes when the largest estimate lies within 3 combined SE of the one for
    the largest start (a plateau, not growth) and no replicate timed out. The
    bound ``2 / mu(1)`` from the stationary law is reported alongside.
    """
    cls = classify_long_term(params)
    if cls is not LongTermClass.UNIQUE_STATIONARY:
        raise ValueError(f"cdi_probe needs a unique stationary law, got {cls.value}")
    mu1 = stationary_numeric(params, n_max).pmf(1)
    ceiling = 2.0 / mu1
    n_list = sorted(int(n) for n in n_list)
    cap = max(10**4, 10 * n_list[-1])
    ests = []
    for i, n in enumerate(n_list):
        res = hitting_times(params, n, {1}, horizon, replicates, cap=cap, rng=make_rng(seed, "cdi", i))
        hit = np.isfinite(res.hit_time)
        m, se = _se_mean(np.where(hit, res.hit_time, horizon))
        ests.append((n, m, se, int((~hit).sum())))
    _, m_top, se_top, _ = ests[-1]
    cells = []
    for n, m, se, missed in ests:
        z = (m - m_top) / math.hypot(se, se_top) if (se or se_top) else 0.0
        cells.append({"n": n, "mean_tau1": m, "std_err": se, "replicates": replicates,
                      "not_hit": missed, "z_vs_largest": z, "below_ceiling": m <= ceiling})
    top = max(cells, key=lambda c: c["mean_tau1"])
    verdict = top["z_vs_largest"] <= 3.0 and all(c["not_hit"] == 0 for c in cells)
    summary = (f"E_n[tau_1] for n in {n_list}: " + ", ".join(f"{c['mean_tau1']:.4f}" for c in cells)
               + f"; ceiling 2/mu(1) = {ceiling:.4f}; {'plateau' if verdict else 'no plateau'}")
    return ProbeReport("cdi", params, seed, cells, verdict, summary, {"ceiling": ceiling})


def explosion_probe(
    params: InteractionParams,
    n0: int = 10,
    cap_list=(10**3, 10**4),
    horizon: float = 5.0,
    replicates: int = 2000,
    seed: int = 0,
) -> ProbeReport:
    """Fraction of paths exceeding each cap before the horizon.

    Supercritical without catastrophes: passes when every fraction is
    positive and consecutive caps agree within 3 combined SE. Subcritical
    or critical: passes when every fraction is zero. Supercritical with
    catastrophes: no verdict.
    """
    dp = derive(params)
    cells = []
    for i, cap in enumerate(cap_list):
        res = simulate_z_batch(params, n0, replicates, horizon=horizon, cap=int(cap), rng=make_rng(seed, "explosion", i))
        p = res.capped_fraction
        cells.append({"cap": int(cap), "capped_fraction": p,
                      "std_err": math.sqrt(p * (1 - p) / replicates), "replicates": replicates})
    fr = [c["capped_fraction"] for c in cells]
    if dp.sigma_coop > 0 and params.lam.is_empty:
        stable = all(
            abs(a["capped_fraction"] - b["capped_fraction"]) <= 3 * math.hypot(a["std_err"], b["std_err"])
            for a, b in zip(cells, cells[1:])
        )
        verdict = all(f > 0 for f in fr) and stable
        expect = "positive, stable capped fraction"
    elif dp.sigma_coop <= 0:
        verdict = all(f == 0 for f in fr)
        expect = "no capped paths"
    else:
        verdict = None
        expect = "no assertion with catastrophes"
    summary = f"capped fractions {fr} at caps {list(cap_list)}; expected {expect}"
    return ProbeReport("explosion", params, seed, cells, verdict, summary)


def parity_probe(
    params: InteractionParams,
    n0: int,
    horizon: float = 100.0,
    replicates: int = 10**4,
    seed: int = 0,
    n_max: int = 401,
) -> ProbeReport:
    """Parity conservation and absorption under annihilation with even jumps only."""
    if not (params.a > 0 and params.c == 0 and params.lam.is_empty and not params.has_odd_channels):
        raise ValueError("parity_probe needs a > 0, c = 0, no catastrophes and only even jump sizes")
    dp = derive(params)
    parity = "even" if n0 % 2 == 0 else "odd"
    res = simulate_z_batch(params, n0, replicates, horizon=horizon, cap=10**6, rng=make_rng(seed, "parity"))
    kept = bool(res.parity_kept.all())
    absorbed = res.outcome == ABSORBED
    finals = res.final_state
    cell = {
        "n0": n0,
        "parity": parity,
        "replicates": replicates,
        "parity_kept": kept,
        "absorbed_fraction": float(absorbed.mean()),
        "absorbed_at_0": int((absorbed & (finals == 0)).sum()),
        "absorbed_at_1": int((absorbed & (finals == 1)).sum()),
    }
    if params.d > 0 or parity == "even":
        verdict = kept and cell["absorbed_at_0"] == replicates
        expect = "absorption at 0"
    elif dp.rho == 0:
        verdict = kept and cell["absorbed_at_1"] == replicates
        expect = "absorption at 1"
    elif dp.sigma_coop >= 0:
        verdict = None
        expect = "nothing (no stationary law claimed unless subcritical)"
    else:
        emp = empirical_distribution(finals)
        target = stationary_numeric(params, n_max, start_parity="odd")
        tv = emp.tv(target)
        cell["tv_to_stationary"] = tv
        verdict = kept and not absorbed.any() and tv <= 0.05
        expect = "no absorption; law close to the odd stationary law"
    summary = f"start {n0} ({parity}): parity kept={kept}, absorbed fraction={cell['absorbed_fraction']}; expected {expect}"
    return ProbeReport("parity", params, seed, [cell], verdict, summary)


def uniform_convergence_probe(
    params: InteractionParams,
    n_pair=(5, 50),
    t_list=(0.0, 1.0, 2.0, 5.0, 10.0),
    replicates: int = 10**5,
    seed: int = 0,
    n_max: int = 400,
    stationary: Distribution | None = None,
) -> ProbeReport:
    """TV distances between laws of ``Z_t`` from two starts and to stationarity.

    Passes when, at the largest ``t``, the two laws are within 0.05 of each
    other and of the stationary law.
    """
    cls = classify_long_term(params)
    if cls is not LongTermClass.UNIQUE_STATIONARY:
        raise ValueError(f"uniform_convergence_probe needs a unique stationary law, got {cls.value}")
    target = stationary if stationary is not None else stationary_numeric(params, n_max)
    t_list = sorted(float(t) for t in t_list)
    cap = max(10**4, 10 * max(n_pair))
    runs = [
        simulate_z_batch(params, n, replicates, snapshot_times=t_list, cap=cap, rng=make_rng(seed, "uniform", i))
        for i, n in enumerate(n_pair)
    ]
    cells = []
    for s, t in enumerate(t_list):
        laws = [empirical_distribution(r.snapshots[s]) for r in runs]
        cells.append({
            "t": t,
            "tv_between": laws[0].tv(laws[1]),
            "tv_to_stationary": [law.tv(target) for law in laws],
            "replicates": replicates,
        })
    last = cells[-1]
    verdict = last["tv_between"] <= 0.05 and max(last["tv_to_stationary"]) <= 0.05
    summary = (f"starts {tuple(n_pair)}: at t={last['t']} TV between={last['tv_between']:.4f}, "
               f"to stationary={[round(v, 4) for v in last['tv_to_stationary']]}")
    return ProbeReport("uniform", params, seed, cells, bool(verdict), summary)
