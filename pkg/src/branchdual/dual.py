"""The [0, 1]-valued moment dual of the branching process.

``X`` solves

    dX = mu(X) dt + sigma(X) dB + (catastrophe jumps)

with ``mu(x) = d (1 - x) + sum_i pi_i (x**(i+1) - x)`` and
``sigma2(x) = c (x - x**2) + sum_i b_i (x**(i+2) - x**2)``. Each atom
``(y, w)`` of the catastrophe measure fires at rate ``w / y**2``. When it
fires, ``X`` moves to ``X + y (1 - X)`` with probability ``X`` and to
``X (1 - y)`` otherwise. The jumps have mean zero given ``X``, so the
compensator needs no drift correction.

The time stepping is Euler-Maruyama on a fixed grid. Jumps are inserted at
their exact exponential times and the state is clamped to [0, 1].

Also here: the discrete Wright-Fisher chain whose effective population size
depends on the frequency of efficient individuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .ctmc import MCEstimate
from .model import InteractionParams, derive
from .rng import as_rng

__all__ = [
    "require_dual",
    "DualUndefinedError",
    "PathX",
    "FixationResult",
    "FixationBatch",
    "XBatch",
    "drift_poly",
    "diffusion_poly",
    "mu_of_x",
    "sigma2_of_x",
    "simulate_x",
    "simulate_x_batch",
    "mc_moment",
    "fixation_sample",
    "fixation_batch",
    "wf_efficiency_step",
    "simulate_wf_efficiency",
]

DEFAULT_DT = 1e-3
DEFAULT_EPS_FIX = 1e-6


class DualUndefinedError(ValueError):
    """Raised for parameter sets without an in-scope moment dual."""


def require_dual(params: InteractionParams, allow_supercritical=True):
    if params.a != 0:
        raise DualUndefinedError(
            "no [0, 1]-valued moment dual with annihilation (a > 0): the dual would live "
            "on [-1, 1] and its well-posedness is unproven"
        )
    if not allow_supercritical and derive(params).sigma_coop > 0:
        raise DualUndefinedError("the dual diffusion needs sigma_coop <= 0 (sigma2 >= 0 on [0, 1])")


def drift_poly(params: InteractionParams) -> Polynomial:
    coef = np.zeros(max([2] + [i + 2 for i, _ in params.pi]))
    coef[0] += params.d
    coef[1] -= params.d
    for i, r in params.pi:
        coef[i + 1] += r
        coef[1] -= r
    return Polynomial(coef)


def diffusion_poly(params: InteractionParams) -> Polynomial:
    coef = np.zeros(max([3] + [i + 3 for i, _ in params.b]))
    coef[1] += params.c
    coef[2] -= params.c
    for i, r in params.b:
        coef[i + 2] += r
        coef[2] -= r
    return Polynomial(coef)


def mu_of_x(x, params: InteractionParams):
    require_dual(params)
    return drift_poly(params)(x)


def sigma2_of_x(x, params: InteractionParams):
    require_dual(params)
    return np.maximum(diffusion_poly(params)(x), 0.0)


class _Coefficients:
    def __init__(self, params: InteractionParams):
        require_dual(params, allow_supercritical=False)
        self.mu = drift_poly(params)
        self.s2 = diffusion_poly(params)
        self.ys = params.lam.locations
        intens = params.lam.jump_intensities
        self.jump_rate = float(intens.sum())
        self.atom_cdf = np.cumsum(intens) / self.jump_rate if intens.size else intens
        # E|jump| per unit time is 2 x (1 - x) * sum_j intens_j y_j
        self.jump_scale = float(2.0 * np.sum(intens * self.ys)) if intens.size else 0.0

    def sigma(self, x):
        return np.sqrt(np.maximum(self.s2(x), 0.0))

    def pick_atoms(self, u):
        return self.ys[np.minimum(np.searchsorted(self.atom_cdf, u, side="right"), self.ys.size - 1)]


def _jump(x, y, u):
    return np.where(u < x, x + y * (1.0 - x), x * (1.0 - y))


class _Ensemble:
    """Euler-Maruyama state for a set of replicates.

    With ``coarse=True`` a second path with step ``2 dt`` is driven by the
    same Brownian increments and the same jumps, for weak-error estimates.
    """

    def __init__(self, coef: _Coefficients, x0, rng, coarse=False):
        self.coef, self.rng, self.coarse = coef, rng, coarse
        self.x = np.array(x0, dtype=float)
        self.clamps = 0
        self.substeps = 0
        r = self.x.size
        self.next_jump = (
            rng.standard_exponential(r) / coef.jump_rate if coef.jump_rate > 0 else np.full(r, np.inf)
        )
        if coarse:
            self.xc = self.x.copy()
            self.acc_h = np.zeros(r)
            self.acc_w = np.zeros(r)

    def keep(self, mask):
        self.x = self.x[mask]
        self.next_jump = self.next_jump[mask]
        if self.coarse:
            self.xc, self.acc_h, self.acc_w = self.xc[mask], self.acc_h[mask], self.acc_w[mask]

    def _em(self, x, h, dw):
        c = self.coef
        out = x + c.mu(x) * h + c.sigma(x) * dw
        bad = (out < 0.0) | (out > 1.0)
        if bad.any():
            self.clamps += int(bad.sum())
            np.clip(out, 0.0, 1.0, out=out)
        return out

    def _move(self, idx, h):
        dw = np.sqrt(h) * self.rng.standard_normal(h.size)
        if idx is None:
            self.x = self._em(self.x, h, dw)
            if self.coarse:
                self.acc_h += h
                self.acc_w += dw
        else:
            self.x[idx] = self._em(self.x[idx], h, dw)
            if self.coarse:
                self.acc_h[idx] += h
                self.acc_w[idx] += dw
        self.substeps += h.size

    def _flush(self, idx=None):
        sl = slice(None) if idx is None else idx
        self.xc[sl] = self._em(self.xc[sl], self.acc_h[sl], self.acc_w[sl])
        self.acc_h[sl] = 0.0
        self.acc_w[sl] = 0.0

    def step(self, t0, dt, flush_coarse=False):
        t1 = t0 + dt
        nj = self.next_jump
        jm = nj < t1
        h = np.where(jm, nj - t0, dt) if self.coef.jump_rate > 0 else np.full(self.x.size, dt)
        self._move(None, h)
        idx = np.flatnonzero(jm)
        while idx.size:
            tau = self.next_jump[idx]
            if self.coarse:
                self._flush(idx)
            y = self.coef.pick_atoms(self.rng.random(idx.size))
            u = self.rng.random(idx.size)
            self.x[idx] = _jump(self.x[idx], y, u)
            if self.coarse:
                self.xc[idx] = _jump(self.xc[idx], y, u)
            nxt = tau + self.rng.standard_exponential(idx.size) / self.coef.jump_rate
            self.next_jump[idx] = nxt
            self._move(idx, np.minimum(nxt, t1) - tau)
            idx = idx[nxt < t1]
        if self.coarse and flush_coarse:
            self._flush()


def _grid_steps(times, dt):
    times = np.asarray(times, dtype=float)
    steps = np.rint(times / dt).astype(np.int64)
    if np.any(np.abs(steps * dt - times) > 1e-9 * np.maximum(1.0, times)):
        raise ValueError("snapshot times must be multiples of dt")
    if np.any(np.diff(steps) < 0) or np.any(steps < 0):
        raise ValueError("snapshot times must be sorted and >= 0")
    return steps


@dataclass
class XBatch:
    snapshot_times: np.ndarray
    values: np.ndarray  # (n_times, replicates)
    coarse_values: np.ndarray | None
    clamp_fraction: float


def simulate_x_batch(
    params: InteractionParams,
    x0: float,
    replicates: int,
    snapshot_times,
    dt: float = DEFAULT_DT,
    rng=None,
    coarse: bool = False,
) -> XBatch:
    """Values of ``replicates`` independent dual paths at the snapshot times.

    Snapshot times off the ``dt`` grid get a shortened final step. With
    ``coarse=True`` the result also holds a coupled path with step ``2 dt``
    (snapshot times must then be multiples of ``2 dt``).
    """
    if not (0.0 <= x0 <= 1.0):
        raise ValueError("x0 must lie in [0, 1]")
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = as_rng(rng)
    coef = _Coefficients(params)
    snap = np.asarray(snapshot_times, dtype=float)
    if np.any(np.diff(snap) < 0) or np.any(snap < 0):
        raise ValueError("snapshot times must be sorted and >= 0")
    ens = _Ensemble(coef, np.full(int(replicates), float(x0)), rng, coarse=coarse)
    vals = np.empty((snap.size, int(replicates)))
    cvals = np.empty_like(vals) if coarse else None
    if coarse:
        steps = _grid_steps(snap, 2 * dt) * 2
        k_max = int(steps[-1]) if steps.size else 0

        def record(k):
            for s in np.flatnonzero(steps == k):
                vals[s] = ens.x
                cvals[s] = ens.xc

        record(0)
        for k in range(k_max):
            ens.step(k * dt, dt, flush_coarse=(k % 2 == 1))
            record(k + 1)
    else:
        # uniform steps, shortened where a snapshot falls between grid points
        t, k = 0.0, 0
        for i, target in enumerate(snap):
            tol = 1e-9 * max(1.0, target)
            while (k + 1) * dt <= target + tol:
                ens.step(t, dt if t == k * dt else (k + 1) * dt - t)
                k += 1
                t = k * dt
            if target - t > tol:
                ens.step(t, target - t)
                t = target
            vals[i] = ens.x
    frac = ens.clamps / ens.substeps if ens.substeps else 0.0
    return XBatch(np.asarray(snapshot_times, dtype=float), vals, cvals, frac)


def mc_moment(
    params: InteractionParams,
    x0: float,
    t: float,
    n: int,
    replicates: int,
    dt: float = DEFAULT_DT,
    rng=None,
) -> MCEstimate:
    """Monte Carlo estimate of ``E_x[X_t ** n]``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if t == 0:
        return MCEstimate(float(x0) ** n, 0.0, int(replicates))
    res = simulate_x_batch(params, x0, replicates, [t], dt=dt, rng=rng)
    return MCEstimate.from_samples(np.power(res.values[0], n))


@dataclass(frozen=True)
class PathX:
    times: np.ndarray
    values: np.ndarray
    fixation: tuple[float, int] | None  # (time, boundary)


def simulate_x(
    params: InteractionParams,
    x0: float,
    horizon: float,
    dt: float = DEFAULT_DT,
    rng=None,
) -> PathX:
    """One dual path on ``[0, horizon]``: grid points plus exact jump times.

    Once the path sits on an absorbing boundary it is held there; 1 is
    always absorbing and 0 is absorbing when ``d = 0``.
    """
    if not (0.0 <= x0 <= 1.0):
        raise ValueError("x0 must lie in [0, 1]")
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    rng = as_rng(rng)
    coef = _Coefficients(params)
    zero_absorbs = params.d == 0

    def absorbed(v):
        return v == 1.0 or (v == 0.0 and zero_absorbs)

    def em(v, h):
        v = v + float(coef.mu(v)) * h + float(coef.sigma(v)) * math.sqrt(h) * rng.standard_normal()
        return min(max(v, 0.0), 1.0)

    x, t = float(x0), 0.0
    times, values = [0.0], [x]
    fix = (0.0, int(x)) if absorbed(x) else None
    next_jump = rng.standard_exponential() / coef.jump_rate if coef.jump_rate > 0 else math.inf
    n_steps = int(math.ceil(horizon / dt - 1e-12))
    for k in range(n_steps):
        t1 = min((k + 1) * dt, horizon)
        while fix is None and next_jump < t1:
            x = em(x, next_jump - t)
            t = next_jump
            y = float(coef.pick_atoms(np.array([rng.random()]))[0])
            x = float(_jump(x, y, rng.random()))
            times.append(t)
            values.append(x)
            next_jump = t + rng.standard_exponential() / coef.jump_rate
            if absorbed(x):
                fix = (t, int(x))
        if fix is None:
            x = em(x, t1 - t)
            if absorbed(x):
                fix = (t1, int(x))
        t = t1
        times.append(t)
        values.append(x)
    return PathX(np.array(times), np.array(values), fix)


@dataclass(frozen=True)
class FixationResult:
    time: float
    boundary: int | None
    timed_out: bool


@dataclass
class FixationBatch:
    time: np.ndarray  # horizon for timed-out replicates
    boundary: np.ndarray  # 0, 1, or -1 when timed out
    clamp_fraction: float

    @property
    def timed_out(self) -> np.ndarray:
        return self.boundary < 0

    def result(self, r: int) -> FixationResult:
        b = int(self.boundary[r])
        return FixationResult(float(self.time[r]), None if b < 0 else b, b < 0)


def _fixed(coef: _Coefficients, x, dt, eps):
    near = (x <= eps) | (x >= 1.0 - eps)
    motion = np.abs(coef.mu(x)) * dt + coef.sigma(x) * math.sqrt(dt) + coef.jump_scale * x * (1.0 - x) * dt
    return near & (motion < eps)


def fixation_batch(
    params: InteractionParams,
    x0: float,
    replicates: int,
    horizon: float,
    dt: float = DEFAULT_DT,
    eps_fix: float = DEFAULT_EPS_FIX,
    rng=None,
) -> FixationBatch:
    """Fixation times and boundaries for independent dual paths.

    A replicate is declared fixed at the first grid time where it lies
    within ``eps_fix`` of a boundary and its local motion scale
    ``|mu| dt + sigma sqrt(dt) + E|jump| dt`` is below ``eps_fix``.
    """
    if not (0.0 < eps_fix <= 1e-3):
        raise ValueError("eps_fix must lie in (0, 1e-3]")
    if derive(params).sigma_coop >= 0:
        raise DualUndefinedError("fixation needs the subcritical cooperative regime (sigma_coop < 0)")
    rng = as_rng(rng)
    coef = _Coefficients(params)
    R = int(replicates)
    time = np.full(R, float(horizon))
    boundary = np.full(R, -1, dtype=np.int64)
    ens = _Ensemble(coef, np.full(R, float(x0)), rng)
    alive = np.arange(R)

    def settle(t):
        nonlocal alive
        f = _fixed(coef, ens.x, dt, eps_fix)
        if f.any():
            j = alive[f]
            time[j] = t
            boundary[j] = (ens.x[f] >= 0.5).astype(np.int64)
            ens.keep(~f)
            alive = alive[~f]

    settle(0.0)
    k = 0
    n_steps = int(math.ceil(horizon / dt - 1e-12))
    while alive.size and k < n_steps:
        ens.step(k * dt, dt)
        k += 1
        settle(k * dt)
    frac = ens.clamps / ens.substeps if ens.substeps else 0.0
    return FixationBatch(time, boundary, frac)


def fixation_sample(
    params: InteractionParams,
    x0: float,
    horizon: float,
    dt: float = DEFAULT_DT,
    eps_fix: float = DEFAULT_EPS_FIX,
    rng=None,
) -> FixationResult:
    return fixation_batch(params, x0, 1, horizon, dt, eps_fix, rng).result(0)


def wf_efficiency_step(N: int, b1: float, x, rng=None) -> np.ndarray:
    """One generation: ``Binomial(floor(N / (1 - b1 x)), x) / floor(N / (1 - b1 x))``."""
    if N < 1 or not (0.0 <= b1 < 1.0):
        raise ValueError("need N >= 1 and b1 in [0, 1)")
    rng = as_rng(rng)
    x = np.asarray(x, dtype=float)
    size = np.floor(N / (1.0 - b1 * x)).astype(np.int64)
    return rng.binomial(size, x) / size


def simulate_wf_efficiency(N: int, b1: float, x0: float, generations: int, rng=None) -> np.ndarray:
    """Frequency path ``x_0, ..., x_generations`` of the efficiency model."""
    rng = as_rng(rng)
    path = np.empty(generations + 1)
    path[0] = x0
    for g in range(generations):
        path[g + 1] = wf_efficiency_step(N, b1, path[g], rng)
    return path
