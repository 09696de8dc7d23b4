"""Seed derivation and RNG construction.

Every random choice in the package flows from an explicit 64-bit seed.
Sub-streams (per tree, per fold, per run) are derived with a SplitMix64-style
mix so results do not depend on numpy's internal spawning scheme.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF

DEFAULT_SEED = 1729


def mix_seed(seed: int, *salt: int) -> int:
    """Derive a child seed from ``seed`` and integer salt values."""
    x = seed & _MASK
    for s in salt:
        x = (x + 0x9E3779B97F4A7C15 + (s & _MASK)) & _MASK
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
        x = x ^ (x >> 31)
    return x


def rng_for(seed: int, *salt: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` (optionally mixed with salt values)."""
    return np.random.default_rng(mix_seed(seed, *salt) if salt else seed & _MASK)
