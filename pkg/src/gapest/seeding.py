"""Deterministic random streams.

Every sampler and Monte Carlo driver in this package takes an integer seed
and produces bitwise-reproducible output. Independent substreams (one per
replicate, bootstrap resample, retry, ...) are derived with
``derived_rng(seed, *path)``: the base seed becomes the SeedSequence
entropy and the index path its spawn key, so replicate ``i`` of a run
seeded with ``s`` always uses ``derived_rng(s, i)`` regardless of how the
replicates are scheduled.
"""

from __future__ import annotations

import numpy as np


def derived_rng(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the substream identified by ``(seed, *path)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def child_seed(seed: int, *path: int) -> int:
    """Integer seed for handing a derived substream to a seed-taking function."""
    return int(derived_rng(seed, *path).integers(0, 2**63 - 1))
