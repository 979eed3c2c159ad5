"""Stationary laws, scale functions and fixation statistics.

The numeric stationary law comes from the truncated generator of
:mod:`branchdual.ctmc`. The closed forms cover the family with one-at-a-time
branching and one-at-a-time cooperation. Scale functions and fixation times
are computed for the dual diffusion without catastrophes.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import Polynomial
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import xlogy

from .ctmc import build_generator
from .dual import diffusion_poly, drift_poly
from .model import InteractionParams, LongTermClass, classify_long_term, derive

__all__ = [
    "AbsorbingRegimeError",
    "Distribution",
    "ScaleTable",
    "empirical_distribution",
    "stationary_numeric",
    "stationary_residual",
    "stationary_closed_form",
    "in_closed_form_family",
    "scale_function",
    "fixation_probability",
    "fixation_time_green",
    "fixation_time_bound",
    "dual_fixation_limit",
]


class AbsorbingRegimeError(ValueError):
    """The parameters do not admit a non-degenerate stationary law."""


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on ``offset, offset + 1, ...``.

    ``tail_mass`` records mass dropped by truncation before renormalising.
    """

    offset: int
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or np.any(p < 0):
            raise ValueError("probabilities must be a non-negative vector")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.probs.size)

    def pmf(self, k: int) -> float:
        i = k - self.offset
        return float(self.probs[i]) if 0 <= i < self.probs.size else 0.0

    def mean(self) -> float:
        return float(np.dot(self.states, self.probs))

    def gf(self, x):
        """Generating function ``sum_k p_k x**k``."""
        x = np.asarray(x, dtype=float)
        return np.power.outer(x, self.states.astype(float)) @ self.probs

    def dense(self, upto: int) -> np.ndarray:
        """Probabilities of states ``0..upto`` (mass beyond is dropped)."""
        out = np.zeros(upto + 1)
        s = self.states
        keep = s <= upto
        out[s[keep]] = self.probs[keep]
        return out

    def tv(self, other: "Distribution") -> float:
        top = int(max(self.states[-1], other.states[-1]))
        return 0.5 * float(np.abs(self.dense(top) - other.dense(top)).sum())

    def rows(self):
        return [(int(k), float(p)) for k, p in zip(self.states, self.probs)]


def empirical_distribution(samples) -> Distribution:
    s = np.asarray(samples, dtype=np.int64)
    if s.size == 0 or s.min() < 0:
        raise ValueError("need non-empty, non-negative samples")
    counts = np.bincount(s)
    return Distribution(0, counts / counts.sum())


def _recurrent_states(params: InteractionParams, n_max: int, start_parity):
    cls = classify_long_term(params, start_parity)
    if cls is LongTermClass.UNIQUE_STATIONARY:
        return np.arange(1, n_max + 1), n_max
    if cls is LongTermClass.UNIQUE_STATIONARY_ODD_PARITY:
        top = n_max if n_max % 2 else n_max - 1
        return np.arange(1, top + 1, 2), top
    raise AbsorbingRegimeError(f"no non-degenerate stationary law: long-term class is {cls.value}")


def stationary_numeric(
    params: InteractionParams, n_max: int = 400, start_parity: str | None = "odd"
) -> Distribution:
    """Solve ``mu Q = 0, sum(mu) = 1`` on the truncated recurrent class.

    ``start_parity`` only matters for parity-preserving dynamics, where the
    odd class is the one carrying a stationary law.
    """
    if n_max < 50:
        raise ValueError("n_max must be >= 50")
    states, top = _recurrent_states(params, n_max, start_parity)
    q = build_generator(params, top).q.tocsr()[states][:, states]
    a = q.T.tolil()
    a[-1, :] = np.ones(states.size)
    rhs = np.zeros(states.size)
    rhs[-1] = 1.0
    mu = spla.spsolve(sp.csc_matrix(a), rhs)
    mu = np.clip(mu, 0.0, None)
    mu /= mu.sum()
    probs = np.zeros(top)
    probs[states - 1] = mu
    return Distribution(1, probs)


def stationary_residual(dist: Distribution, params: InteractionParams, n_max: int) -> float:
    """``||mu Q||_inf / ||Q||_inf`` on the truncated generator (states 0..n_max)."""
    q = build_generator(params, n_max).q
    mu = dist.dense(n_max)
    return float(np.abs(q.T @ mu).max() / spla.norm(q, np.inf))


def in_closed_form_family(params: InteractionParams) -> bool:
    pi, b = params.pi_dict, params.b_dict
    return (
        params.d == 0
        and params.a == 0
        and params.lam.is_empty
        and set(pi) == {1}
        and set(b) <= {1}
        and params.c > b.get(1, 0.0)
    )


def stationary_closed_form(rho: float, b1: float, c: float, K: int = 200) -> Distribution:
    """Stationary law for ``pi = {1: rho}``, ``b = {1: b1}``, competition ``c``.

    With ``r = b1 / c`` and ``alpha = 2 rho / b1 - 1`` the law is
    ``mu(k) = C (alpha)_k / k! r**k`` (rising factorial) and
    ``C = 1 / ((1 - r)**(-alpha) - 1)``. At ``alpha = 0`` this becomes the
    log-series law ``r**k / (k ln(1 / (1 - r)))``, and at ``b1 = 0`` the
    zero-truncated Poisson law with mean parameter ``2 rho / c``.
    """
    if rho <= 0:
        raise ValueError("need rho > 0")
    if not (0 <= b1 < c):
        raise ValueError("need 0 <= b1 < c (subcritical cooperation)")
    k = np.arange(1, K + 1, dtype=float)
    if b1 == 0:
        lam = 2.0 * rho / c
        logp = k * math.log(lam) - np.cumsum(np.log(k)) - math.log(math.expm1(lam))
        p = np.exp(logp)
    else:
        r = b1 / c
        alpha = 2.0 * rho / b1 - 1.0
        log1mr = math.log1p(-r)
        c_alpha = alpha / math.expm1(-alpha * log1mr) if alpha != 0 else -1.0 / log1mr
        # mu(k) = c_alpha * r**k * prod_{j=1}^{k-1} (alpha + j) / (j + 1)
        ratios = np.concatenate(([1.0], (alpha + k[:-1]) / (k[:-1] + 1.0) * r))
        p = c_alpha * r * np.cumprod(ratios)
    total = math.fsum(p)
    return Distribution(1, p / total, tail_mass=max(0.0, 1.0 - total))


@dataclass(frozen=True, eq=False)
class ScaleTable:
    """Scale function sampled on a grid of [0, 1], with ``S(0) = 0``."""

    grid: np.ndarray
    values: np.ndarray

    @functools.cached_property
    def _interp(self):
        return PchipInterpolator(self.grid, self.values)

    def __call__(self, x):
        return self._interp(x)

    def ratio(self, x):
        """``(S(x) - S(0)) / (S(1) - S(0))``."""
        return (self(x) - self.values[0]) / (self.values[-1] - self.values[0])

    def rows(self):
        return [(float(x), float(s)) for x, s in zip(self.grid, self.values)]


_XX = Polynomial([0.0, 1.0, -1.0])  # x (1 - x)


def _reduced(poly: Polynomial) -> Polynomial:
    quo, rem = divmod(poly, _XX)
    if np.any(np.abs(rem.coef) > 1e-12 * max(1.0, np.abs(poly.coef).max())):
        raise ValueError("polynomial does not vanish at both 0 and 1")
    return quo


def _reduced_diffusion(params: InteractionParams) -> Polynomial:
    """``sigma2(x) / (x (1 - x))``, checked to be positive on [0, 1]."""
    ps = _reduced(diffusion_poly(params))
    roots = ps.roots()
    real = roots[np.abs(roots.imag) < 1e-12].real
    if ps(0.0) <= 0 or ps(1.0) <= 0 or np.any((real >= 0) & (real <= 1)):
        raise ValueError("sigma2 must be positive on (0, 1)")
    return ps


def _scale_grid(panels: int, levels: int) -> np.ndarray:
    base = np.linspace(0.0, 1.0, panels + 1)
    h = 1.0 / panels
    fine = h * 0.5 ** np.arange(1, levels + 1)
    return np.unique(np.concatenate([base, fine, 1.0 - fine]))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@functools.lru_cache(maxsize=64)
def scale_function(params: InteractionParams, panels: int = 256, levels: int = 30) -> ScaleTable:
    """Scale function ``S(x) = int_0^x exp(-int_{1/2}^y 2 mu / sigma2) dy``.

    Needs ``a = d = 0`` and ``sigma2 > 0`` on (0, 1). Both ``mu`` and
    ``sigma2`` then carry a factor ``x (1 - x)``, which is divided out
    exactly so the integrand ``2 mu / sigma2`` is a smooth rational function
    on the closed interval. Both integrals use Gauss-Legendre panels on a
    grid refined geometrically towards the endpoints.
    """
    if params.a != 0 or params.d != 0:
        raise ValueError("scale function needs a = 0 and d = 0")
    if not params.lam.is_empty:
        raise ValueError("scale function is defined for the diffusion without catastrophes")
    if panels % 2:
        raise ValueError("panels must be even so that 1/2 is a node")
    pm = _reduced(drift_poly(params))
    ps = _reduced_diffusion(params)

    def h(z):
        return 2.0 * pm(z) / ps(z)

    grid = _scale_grid(panels, levels)
    lo, hi = grid[:-1], grid[1:]
    half = 0.5 * (hi - lo)
    ynodes = lo[:, None] + half[:, None] * (1.0 + _GL_X)
    f_nodes = np.concatenate(([0.0], np.cumsum(half * (h(ynodes) @ _GL_W))))
    f_nodes -= f_nodes[np.searchsorted(grid, 0.5)]
    # inner integral from the panel start to each Gauss node
    sub_half = 0.5 * (ynodes - lo[:, None])
    znodes = lo[:, None, None] + sub_half[:, :, None] * (1.0 + _GL_X)
    inner = f_nodes[:-1, None] + sub_half * (h(znodes) @ _GL_W)
    s_incr = half * (np.exp(-inner) @ _GL_W)
    values = np.concatenate(([0.0], np.cumsum(s_incr)))
    return ScaleTable(grid, values)


def _require_martingale_free(params: InteractionParams):
    if params.a != 0:
        raise ValueError("needs a = 0")
    if derive(params).sigma_coop >= 0:
        raise ValueError("needs the subcritical cooperative regime (sigma_coop < 0)")


def fixation_probability(params: InteractionParams, x: float) -> float:
    """Probability that the dual diffusion (no catastrophes) fixes at 1 from ``x``."""
    _require_martingale_free(params)
    if not params.lam.is_empty:
        raise ValueError("fixation_probability covers the diffusion without catastrophes; see dual_fixation_limit")
    if params.d > 0:
        raise ValueError("with d > 0 the dual reaches 1 almost surely; use dual_fixation_limit")
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    if derive(params).rho == 0:
        return float(x)
    return float(scale_function(params).ratio(x))


def fixation_time_green(params: InteractionParams, x: float) -> float:
    """Expected fixation time of the martingale dual ``dX = sigma(X) dB``.

    ``E_x[T] = 2 int_0^1 G(x, y) / sigma2(y) dy`` with the Green kernel
    ``G(x, y) = min(x, y) (1 - max(x, y))``; ``G / sigma2`` has finite limits
    at both ends once the ``y (1 - y)`` factor is divided out.
    """
    _require_martingale_free(params)
    if params.d != 0 or params.pi or not params.lam.is_empty:
        raise ValueError("needs d = 0, pi = 0 and no catastrophes")
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    if x in (0.0, 1.0):
        return 0.0
    ps = _reduced_diffusion(params)
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    left, _ = quad(lambda y: 1.0 / ((1.0 - y) * ps(y)), 0.0, x, **opts)
    right, _ = quad(lambda y: 1.0 / (y * ps(y)), x, 1.0, **opts)
    return 2.0 * ((1.0 - x) * left + x * right)


def fixation_time_bound(x: float, c: float, b=None) -> float:
    """Entropy bound ``-2 ((1-x) ln(1-x) + x ln x) / (c - sum_i i b_i)``."""
    b = dict(b or {})
    denom = c - math.fsum(i * r for i, r in b.items())
    if denom <= 0:
        raise ValueError("need c > sum_i i b_i")
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    return float(-2.0 * (xlogy(1.0 - x, 1.0 - x) + xlogy(x, x)) / denom)


def dual_fixation_limit(
    params: InteractionParams, x: float, stationary: Distribution | None = None, n_max: int = 400
) -> float:
    """``lim_t P_x(X_t = 1)`` for the dual of a subcritical process without annihilation.

    ``x`` without branching or death; ``sum_i mu(i) x**i`` with the
    stationary law ``mu`` when ``d = 0`` and branching is present; ``1``
    when ``d > 0``.
    """
    _require_martingale_free(params)
    if not (0.0 <= x <= 1.0):
        raise ValueError("x must lie in [0, 1]")
    dp = derive(params)
    if params.d > 0:
        return 1.0
    if dp.rho == 0:
        return float(x)
    if stationary is None:
        if in_closed_form_family(params):
            stationary = stationary_closed_form(dp.rho, params.b_dict.get(1, 0.0), params.c, K=n_max)
        else:
            stationary = stationary_numeric(params, n_max)
    return float(stationary.gf(x))
