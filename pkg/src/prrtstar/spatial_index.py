"""Exact nearest-neighbour and fixed-radius queries over tree vertices.

Two interchangeable indexes are provided. ``GridIndex`` buckets points into a
uniform grid over the world bounds; ``LinearIndex`` scans every entry with
numpy. Both return identical answers (ties broken by the lowest vertex id),
which the planner relies on when swapping one for the other.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .geometry import Aabb, Environment, GeometryError, State, distance, free_measure, unit_ball_volume


class DuplicateIdError(KeyError):
    pass


def near_radius(n: int, gamma: float, d: int) -> float:
    """Shrinking neighbour radius ``gamma * (ln n / n) ** (1/d)``; zero for n < 2."""
    if n < 2:
        return 0.0
    return gamma * math.pow(math.log(n) / n, 1.0 / d)


def gamma_star(env: Environment, d: Optional[int] = None) -> float:
    d = env.dim if d is None else d
    return math.pow(2.0 * (1.0 + 1.0 / d), 1.0 / d) * math.pow(free_measure(env) / unit_ball_volume(d), 1.0 / d)


@dataclass(frozen=True)
class NearParams:
    gamma: float
    dimension: int

    def radius(self, n: int) -> float:
        return near_radius(n, self.gamma, self.dimension)

    @classmethod
    def for_env(cls, env: Environment, gamma: Optional[float] = None, factor: float = 1.1) -> "NearParams":
        gs = gamma_star(env)
        if gamma is None:
            gamma = factor * gs
        elif gamma <= gs:
            warnings.warn(f"gamma={gamma:.4g} is not above gamma*={gs:.4g}; "
                          "asymptotic optimality is not guaranteed", stacklevel=2)
        return cls(float(gamma), env.dim)


class LinearIndex:
    """Brute-force index; the correctness oracle for ``GridIndex``."""

    def __init__(self, dim: int, capacity: int = 1024):
        self.dim = dim
        self._pts = np.empty((capacity, dim))
        self._ids = np.empty(capacity, dtype=np.int64)
        self._seen: set = set()
        self._n = 0

    def __len__(self):
        return self._n

    def insert(self, point: Sequence[float], vertex_id: int):
        if vertex_id in self._seen:
            raise DuplicateIdError(f"duplicate vertex id {vertex_id}")
        if len(point) != self.dim:
            raise GeometryError("dimension mismatch")
        if self._n == len(self._ids):
            self._pts = np.concatenate([self._pts, np.empty_like(self._pts)])
            self._ids = np.concatenate([self._ids, np.empty_like(self._ids)])
        self._pts[self._n] = point
        self._ids[self._n] = vertex_id
        self._seen.add(vertex_id)
        self._n += 1

    def _dists(self, x):
        pts = self._pts[: self._n]
        s = np.zeros(self._n)
        for j in range(self.dim):
            t = pts[:, j] - x[j]
            s = s + t * t
        return np.sqrt(s)

    def nearest(self, x: Sequence[float]) -> Optional[int]:
        if self._n == 0:
            return None
        d = self._dists(x)
        ids = self._ids[: self._n]
        cand = ids[d == d.min()]
        return int(cand.min())

    def within(self, x: Sequence[float], r: float) -> List[int]:
        if self._n == 0:
            return []
        d = self._dists(x)
        return sorted(int(i) for i in self._ids[: self._n][d <= r])


class GridIndex:
    """Uniform bucket grid over ``bounds``.

    Queries outside the bounds, or whose cell range would cost more than a full
    scan, fall back to scanning every entry.
    """

    def __init__(self, bounds: Aabb, cells_per_axis: int = 64):
        self.bounds = bounds
        self.dim = bounds.dim
        self.m = max(1, int(cells_per_axis))
        self.h = tuple((hi - lo) / self.m for lo, hi in zip(bounds.lo, bounds.hi))
        self._cells: Dict[tuple, List[int]] = {}
        self._pts: Dict[int, State] = {}

    def __len__(self):
        return len(self._pts)

    def _cell(self, x) -> tuple:
        return tuple(min(max(int((c - lo) / h), 0), self.m - 1) if h > 0 else 0
                     for c, lo, h in zip(x, self.bounds.lo, self.h))

    def insert(self, point: Sequence[float], vertex_id: int):
        if vertex_id in self._pts:
            raise DuplicateIdError(f"duplicate vertex id {vertex_id}")
        if len(point) != self.dim:
            raise GeometryError("dimension mismatch")
        p = tuple(float(c) for c in point)
        self._pts[vertex_id] = p
        self._cells.setdefault(self._cell(p), []).append(vertex_id)

    def _scan(self, x):
        best_id, best_d = None, math.inf
        for vid, p in self._pts.items():
            d = distance(p, x)
            if d < best_d or (d == best_d and vid < best_id):
                best_id, best_d = vid, d
        return best_id

    def nearest(self, x: Sequence[float]) -> Optional[int]:
        n = len(self._pts)
        if n == 0:
            return None
        if n <= 32 or not self.bounds.contains(x):
            return self._scan(x)
        c0 = self._cell(x)
        best_id, best_d = None, math.inf
        visited = 0
        k = 0
        while True:
            ranges = [range(max(c - k, 0), min(c + k, self.m - 1) + 1) for c in c0]
            for cell in _block(ranges):
                if max(abs(a - b) for a, b in zip(cell, c0)) != k:
                    continue
                visited += 1
                for vid in self._cells.get(cell, ()):
                    d = distance(self._pts[vid], x)
                    if d < best_d or (d == best_d and vid < best_id):
                        best_id, best_d = vid, d
            if visited > n + 64:
                return self._scan(x)
            if all(c - k <= 0 and c + k >= self.m - 1 for c in c0):
                return best_id
            # anything in ring k+1 lies at least this far away
            lb = min(min(xj - (lo + (c - k) * h), (lo + (c + k + 1) * h) - xj)
                     for xj, c, lo, h in zip(x, c0, self.bounds.lo, self.h))
            if best_d < lb - 1e-9:
                return best_id
            k += 1

    def within(self, x: Sequence[float], r: float) -> List[int]:
        if not self._pts:
            return []
        if not self.bounds.contains(x):
            return sorted(v for v, p in self._pts.items() if distance(p, x) <= r)
        ranges = []
        ncells = 1
        for xj, lo, h in zip(x, self.bounds.lo, self.h):
            # one extra cell each side absorbs rounding in the cell arithmetic
            a = min(max(int((xj - r - lo) / h) - 1, 0), self.m - 1) if h > 0 else 0
            b = min(max(int((xj + r - lo) / h) + 1, 0), self.m - 1) if h > 0 else 0
            ranges.append(range(a, b + 1))
            ncells *= b - a + 1
        if ncells > len(self._pts):
            return sorted(v for v, p in self._pts.items() if distance(p, x) <= r)
        out = []
        for cell in _block(ranges):
            for vid in self._cells.get(cell, ()):
                if distance(self._pts[vid], x) <= r:
                    out.append(vid)
        out.sort()
        return out


def _block(ranges):
    if len(ranges) == 2:
        for a in ranges[0]:
            for b in ranges[1]:
                yield (a, b)
        return
    yield from itertools.product(*ranges)
