"""Deterministic seed derivation.

Every random draw in the package comes from a generator seeded by a pure
function of (master_seed, *labels).  Results are therefore reproducible and
independent of execution order, which is what lets repeated solves of the same
query be issued in any order (or in parallel) without changing the output.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x &= _MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK64
    return x ^ (x >> 31)


def mix64(*parts: int) -> int:
    """Collapse integer labels into one well-mixed 64-bit seed."""
    state = _GOLDEN
    for p in parts:
        state = _splitmix64(state ^ ((int(p) * _GOLDEN) & _MASK64))
    return state


def rng_from(*parts: int) -> np.random.Generator:
    """A fresh generator keyed by the given labels."""
    return np.random.Generator(np.random.PCG64(mix64(*parts)))


def unit_from(*parts: int) -> float:
    """Deterministic float in [0, 1) keyed by the given labels."""
    return mix64(*parts) / 2.0**64
