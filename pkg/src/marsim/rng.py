"""Deterministic hierarchical random streams.

Every stochastic component (workload jitter, mobility, each scheduler call,
each search tree) gets its own stream addressed by a path of integers under
one master seed.  Streams are stateless values: the same (seed, path) always
yields the same generator, no matter how many draws sibling streams consumed.
"""

from __future__ import annotations

import numpy as np

# top-level stream domains
WORKLOAD = 0
MOBILITY = 1
SCHEDULE = 2
AUX = 3

_U64 = (1 << 64) - 1


class Stream:
    """Address of one independent random stream under a master seed."""

    __slots__ = ("entropy", "path")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        self.entropy = int(seed) & _U64
        self.path = tuple(int(p) for p in path)

    def child(self, *ids: int) -> "Stream":
        return Stream(self.entropy, self.path + ids)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.entropy, spawn_key=self.path)
        return np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"Stream(seed={self.entropy}, path={self.path})"
