"""Parameters, jump rates and regime classification of the interacting branching process.

The population ``Z`` lives on {0, 1, 2, ...}. With ``n`` individuals present:

* each individual dies at rate ``d`` and gives birth to ``i`` new individuals at
  rate ``pi[i]``;
* each unordered pair competes at rate ``c`` (one dies), annihilates at rate
  ``a`` (both die) or cooperates to produce ``i`` new individuals at rate
  ``b[i]``; there are ``n (n - 1) / 2`` such pairs;
* a catastrophe kills ``k - 1`` out of ``k`` chosen individuals at rate
  ``C(n, k) * lambda_{n,k}``, where ``lambda_{n,k} = sum_j w_j y_j^(k-2) (1-y_j)^(n-k)``
  for an atomic measure with atoms ``(y_j, w_j)``.

Every other module reads its rates from here.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
from scipy.stats import binom

__all__ = [
    "LambdaMeasure",
    "InteractionParams",
    "DerivedParams",
    "Regime",
    "LongTermClass",
    "derive",
    "classify_regime",
    "lambda_nk",
    "catastrophe_rates",
    "transition_rates",
    "drift_at",
    "drift_closed_form",
    "classify_long_term",
    "params_from_dict",
    "params_to_dict",
    "load_params",
]


@dataclass(frozen=True)
class LambdaMeasure:
    """Finite atomic measure on (0, 1] given as ``((y, w), ...)``."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        atoms = tuple(sorted((float(y), float(w)) for y, w in self.atoms))
        for y, w in atoms:
            if not (0.0 < y <= 1.0) or not math.isfinite(y):
                raise ValueError(f"atom location must lie in (0, 1], got {y}")
            if not (w > 0.0) or not math.isfinite(w):
                raise ValueError(f"atom mass must be positive and finite, got {w}")
        ys = [y for y, _ in atoms]
        if len(set(ys)) != len(ys):
            raise ValueError("atom locations must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)

    @property
    def is_empty(self) -> bool:
        return not self.atoms

    @property
    def total_mass(self) -> float:
        return sum(w for _, w in self.atoms)

    @property
    def locations(self) -> np.ndarray:
        return np.array([y for y, _ in self.atoms], dtype=float)

    @property
    def masses(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def jump_intensities(self) -> np.ndarray:
        """Rate ``w / y**2`` at which each atom fires in the dual process."""
        return self.masses / self.locations**2


def _litter_table(rates: Mapping[int, float] | Iterable[tuple[int, float]], name: str):
    items = rates.items() if isinstance(rates, Mapping) else rates
    table: dict[int, float] = {}
    for i, r in items:
        i_int = int(i)
        if i_int != i or i_int < 1:
            raise ValueError(f"{name}: litter sizes must be integers >= 1, got {i!r}")
        r = float(r)
        if not math.isfinite(r) or r < 0.0:
            raise ValueError(f"{name}[{i_int}] must be a finite rate >= 0, got {r}")
        if i_int in table:
            raise ValueError(f"{name}: duplicate litter size {i_int}")
        if r > 0.0:
            table[i_int] = r
    return tuple(sorted(table.items()))


@dataclass(frozen=True)
class InteractionParams:
    """Model rates. ``pi`` and ``b`` accept a mapping ``{litter size: rate}``.

    Internally they are stored as sorted tuples of ``(size, rate)`` with
    zero rates dropped, so instances are hashable and compare by value.
    """

    d: float = 0.0
    c: float = 0.0
    a: float = 0.0
    pi: Any = ()
    b: Any = ()
    lam: LambdaMeasure = field(default_factory=LambdaMeasure)

    def __post_init__(self):
        for name in ("d", "c", "a"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be a finite rate >= 0, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "pi", _litter_table(self.pi, "pi"))
        object.__setattr__(self, "b", _litter_table(self.b, "b"))
        lam = self.lam
        if not isinstance(lam, LambdaMeasure):
            lam = LambdaMeasure(tuple(lam))
        object.__setattr__(self, "lam", lam)

    def with_(self, **changes) -> "InteractionParams":
        return replace(self, **changes)

    @property
    def pi_dict(self) -> dict[int, float]:
        return dict(self.pi)

    @property
    def b_dict(self) -> dict[int, float]:
        return dict(self.b)

    @property
    def litter_sizes(self) -> list[int]:
        return sorted({i for i, _ in self.pi} | {i for i, _ in self.b})

    @property
    def has_odd_channels(self) -> bool:
        return any(i % 2 == 1 for i, _ in self.pi + self.b)


@dataclass(frozen=True)
class DerivedParams:
    rho: float
    b_tot: float
    m: float
    sigma_coop: float


class Regime(enum.Enum):
    SUBCRITICAL = "SubcriticalCooperative"
    CRITICAL = "CriticalCooperative"
    SUPERCRITICAL = "SupercriticalCooperative"


class LongTermClass(enum.Enum):
    ABSORBED_AT_0 = "AbsorbedAt0"
    ABSORBED_AT_1 = "AbsorbedAt1"
    ABSORBED_IN_01 = "AbsorbedIn01"
    UNIQUE_STATIONARY = "UniqueStationary"
    UNIQUE_STATIONARY_ODD_PARITY = "UniqueStationaryOddParity"
    NOT_CLASSIFIED = "NotClassified"


def derive(params: InteractionParams) -> DerivedParams:
    rho = math.fsum(r for _, r in params.pi)
    b_tot = math.fsum(r for _, r in params.b)
    m = math.fsum([-params.d] + [i * r for i, r in params.pi])
    sigma = math.fsum([-params.c, -2.0 * params.a] + [i * r for i, r in params.b])
    return DerivedParams(rho=rho, b_tot=b_tot, m=m, sigma_coop=sigma)


def classify_regime(params: InteractionParams) -> Regime:
    s = derive(params).sigma_coop
    if s < 0:
        return Regime.SUBCRITICAL
    if s > 0:
        return Regime.SUPERCRITICAL
    return Regime.CRITICAL


def lambda_nk(n: int, k: int, lam: LambdaMeasure) -> float:
    """Per-group catastrophe rate for a given group of ``k`` out of ``n``."""
    if not (2 <= k <= n):
        raise ValueError(f"need 2 <= k <= n, got n={n}, k={k}")
    return math.fsum(w * y ** (k - 2) * (1.0 - y) ** (n - k) for y, w in lam.atoms)


def catastrophe_rates(n: int, lam: LambdaMeasure) -> np.ndarray:
    """``C(n, k) * lambda_{n,k}`` for ``k = 2..n`` (empty for ``n < 2``).

    Evaluated as ``sum_j (w_j / y_j**2) * Binom(n, y_j).pmf(k)`` so that large
    binomial coefficients never appear on their own.
    """
    if n < 2:
        return np.zeros(0)
    k = np.arange(2, n + 1)
    out = np.zeros(k.size)
    for y, w in lam.atoms:
        out += (w / y**2) * binom.pmf(k, n, y)
    return out


def transition_rates(n: int, params: InteractionParams) -> list[tuple[int, float]]:
    """Positive jump rates out of state ``n`` as ``[(target, rate), ...]``.

    Channels that share a target are merged (death, competition and
    2-catastrophes all lead to ``n - 1``). Targets are distinct and sorted.
    """
    n = int(n)
    if n < 0:
        raise ValueError("state must be >= 0")
    if n == 0:
        return []
    pairs = n * (n - 1) / 2.0
    acc: dict[int, list[float]] = {}

    def add(target: int, rate: float):
        if rate > 0.0:
            acc.setdefault(target, []).append(rate)

    pi, b = params.pi_dict, params.b_dict
    for i in params.litter_sizes:
        add(n + i, n * pi.get(i, 0.0))
        add(n + i, pairs * b.get(i, 0.0))
    add(n - 1, params.d * n)
    add(n - 1, params.c * pairs)
    if n >= 2:
        add(n - 2, params.a * pairs)
        cat = catastrophe_rates(n, params.lam)
        for k, r in zip(range(2, n + 1), cat):
            add(n - k + 1, float(r))
    out = [(j, math.fsum(rs)) for j, rs in acc.items()]
    return sorted((j, r) for j, r in out if r > 0.0)


def drift_at(n: int, params: InteractionParams) -> float:
    """Expected instantaneous change ``sum_j q(n, j) (j - n)``."""
    return math.fsum(r * (j - n) for j, r in transition_rates(n, params))


def drift_closed_form(n: int, params: InteractionParams) -> float:
    """Closed form of :func:`drift_at`.

    ``n m + C(n,2) sigma - sum_k (k-1) C(n,k) lambda_{n,k}``; the catastrophe sum
    per atom reduces to ``(w / y**2) (n y - 1 + (1 - y)**n)``, the mean of
    ``K - 1`` on ``{K >= 2}`` for ``K ~ Binom(n, y)``.
    """
    dp = derive(params)
    terms = [n * dp.m, n * (n - 1) / 2.0 * dp.sigma_coop]
    for y, w in params.lam.atoms:
        terms.append(-(w / y**2) * (n * y - 1.0 + (1.0 - y) ** n))
    return math.fsum(terms)


def _is_parity_preserving(params: InteractionParams) -> bool:
    return (
        params.a > 0
        and params.c == 0
        and params.lam.is_empty
        and not params.has_odd_channels
    )


def classify_long_term(
    params: InteractionParams, start_parity: str | None = None
) -> LongTermClass:
    """Long-term behaviour in the subcritical cooperative regime.

    ``start_parity`` ("even" or "odd") is only consulted, and then required,
    when annihilation is present, ``d = 0`` and every jump channel preserves
    parity.
    """
    dp = derive(params)
    if dp.sigma_coop >= 0:
        return LongTermClass.NOT_CLASSIFIED
    if params.a == 0:
        if params.d > 0:
            return LongTermClass.ABSORBED_AT_0
        if dp.rho == 0:
            return LongTermClass.ABSORBED_AT_1
        return LongTermClass.UNIQUE_STATIONARY
    if params.d > 0:
        return LongTermClass.ABSORBED_AT_0
    if not _is_parity_preserving(params):
        return LongTermClass.ABSORBED_IN_01 if dp.rho == 0 else LongTermClass.ABSORBED_AT_0
    if start_parity not in ("even", "odd"):
        raise ValueError("start_parity ('even' or 'odd') is required for parity-preserving dynamics")
    if start_parity == "even":
        return LongTermClass.ABSORBED_AT_0
    if dp.rho == 0:
        return LongTermClass.ABSORBED_AT_1
    return LongTermClass.UNIQUE_STATIONARY_ODD_PARITY


_PARAM_KEYS = {"d", "c", "a", "pi", "b", "lambda"}


def params_from_dict(doc: Mapping[str, Any]) -> InteractionParams:
    unknown = set(doc) - _PARAM_KEYS
    if unknown:
        raise ValueError(f"unknown parameter keys: {sorted(unknown)}")

    def litters(key):
        raw = doc.get(key, {})
        if not isinstance(raw, Mapping):
            raise ValueError(f"{key} must be an object keyed by litter size")
        out = {}
        for s, r in raw.items():
            if not str(s).isdigit():
                raise ValueError(f"{key}: litter size keys must be decimal integers, got {s!r}")
            out[int(s)] = r
        return out

    atoms = doc.get("lambda", [])
    if not isinstance(atoms, list) or any(not isinstance(a, (list, tuple)) or len(a) != 2 for a in atoms):
        raise ValueError("lambda must be a list of [y, w] pairs")
    return InteractionParams(
        d=doc.get("d", 0.0),
        c=doc.get("c", 0.0),
        a=doc.get("a", 0.0),
        pi=litters("pi"),
        b=litters("b"),
        lam=LambdaMeasure(tuple((y, w) for y, w in atoms)),
    )


def params_to_dict(params: InteractionParams) -> dict[str, Any]:
    return {
        "d": params.d,
        "c": params.c,
        "a": params.a,
        "pi": {str(i): r for i, r in params.pi},
        "b": {str(i): r for i, r in params.b},
        "lambda": [[y, w] for y, w in params.lam.atoms],
    }


def load_params(path: str | Path) -> InteractionParams:
    with open(path) as fh:
        return params_from_dict(json.load(fh))
