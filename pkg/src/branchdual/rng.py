"""Deterministic random streams derived from a master seed.

A stream is addressed by the master seed plus a key path of ints or
strings, e.g. ``make_rng(7, "ctmc", 3)``. Equal addresses give
bit-identical generators; distinct addresses give independent ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_int(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    if int(k) < 0:
        raise ValueError("stream keys must be non-negative")
    return int(k)


def make_rng(seed: int, *key: int | str) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(_key_int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    """Accept a Generator, an integer seed, or None (fresh entropy)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
