"""Seeded random number generation.

Every stochastic operation in the package takes an explicit integer seed and
builds its generator here, so identical seeds reproduce identical results
everywhere.  Philox is counter-based, which makes spawned child streams
independent and safe to consume in parallel without coordination.
"""

import numpy as np

from .exceptions import ValidationError


def generator(seed: int) -> np.random.Generator:
    """Return a Philox-backed generator for the given seed."""
    return np.random.Generator(np.random.Philox(_seq(seed)))


def spawn(seed: int, n: int) -> list[np.random.Generator]:
    """Return ``n`` independent child generators, deterministic in (seed, index)."""
    if n < 0:
        raise ValidationError(f"cannot spawn {n} generators")
    return [np.random.Generator(np.random.Philox(c)) for c in _seq(seed).spawn(n)]


def _seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise ValidationError(f"seed must be an integer, got {seed!r}")
    return np.random.SeedSequence(int(seed))
