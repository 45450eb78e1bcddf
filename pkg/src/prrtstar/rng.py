"""Seeded uniform stream shared by both planner backends.

Every run draws doubles from numpy's PCG64 seeded through ``SeedSequence``,
pulled in fixed blocks. The compiled loop and the pure-Python loop consume
the stream in the same order, so a seed fixes the whole run on either backend.
"""
from __future__ import annotations

import numpy as np

BLOCK = 4096


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & (2**64 - 1))))


class UniformStream:
    def __init__(self, seed: int, block: int = BLOCK):
        self.gen = make_generator(seed)
        self.block = block
        self._buf = self.gen.random(block)
        self._pos = 0

    def refill(self) -> np.ndarray:
        return self.gen.random(self.block)

    def next(self) -> float:
        if self._pos == self.block:
            self._buf = self.refill()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)
