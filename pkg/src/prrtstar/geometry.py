"""Points, axis-aligned boxes and the collision/distance queries built on them.

States are plain tuples of floats. Obstacles are closed boxes: a point on an
obstacle face is occupied, a point on the world boundary is free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

State = Tuple[float, ...]

EPS = 1e-9


class GeometryError(ValueError):
    """Raised on malformed geometry (dimension mismatch, inverted boxes...)."""


def as_state(coords: Sequence[float]) -> State:
    s = tuple(float(c) for c in coords)
    if not all(math.isfinite(c) for c in s):
        raise GeometryError(f"non-finite coordinate in {s!r}")
    return s


def distance(x1: Sequence[float], x2: Sequence[float]) -> float:
    """Euclidean distance.

    Accumulates squared differences axis by axis; the compiled kernels use the
    same order so both backends agree bit for bit.
    """
    if len(x1) != len(x2):
        raise GeometryError(f"dimension mismatch: {len(x1)} vs {len(x2)}")
    s = 0.0
    for a, b in zip(x1, x2):
        t = a - b
        s += t * t
    return math.sqrt(s)


@dataclass(frozen=True)
class Aabb:
    lo: State
    hi: State

    def __post_init__(self):
        lo, hi = as_state(self.lo), as_state(self.hi)
        if len(lo) != len(hi):
            raise GeometryError("box corners differ in dimension")
        if any(a > b for a, b in zip(lo, hi)):
            raise GeometryError(f"inverted box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains(self, x: Sequence[float]) -> bool:
        return all(l <= c <= h for c, l, h in zip(x, self.lo, self.hi))

    def volume(self) -> float:
        return math.prod(h - l for l, h in zip(self.lo, self.hi))

    def clamp(self, x: Sequence[float]) -> State:
        return tuple(min(max(c, l), h) for c, l, h in zip(x, self.lo, self.hi))


@dataclass(frozen=True)
class Environment:
    bounds: Aabb
    obstacles: Tuple[Aabb, ...]
    start: State
    goal_center: State
    goal_radius: float
    # packed copies for the vectorised and compiled paths
    obs_lo: np.ndarray = field(init=False, repr=False, compare=False)
    obs_hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.bounds.dim
        if d < 2:
            raise GeometryError("configuration space must have d >= 2")
        obstacles = tuple(self.obstacles)
        for i, box in enumerate(obstacles):
            if box.dim != d:
                raise GeometryError(f"obstacle {i} has dimension {box.dim}, expected {d}")
        start = as_state(self.start)
        goal = as_state(self.goal_center)
        if len(start) != d:
            raise GeometryError("start: dimension mismatch")
        if len(goal) != d:
            raise GeometryError("goal: dimension mismatch")
        radius = float(self.goal_radius)
        if not radius > 0:
            raise GeometryError("goal: radius must be positive")
        object.__setattr__(self, "obstacles", obstacles)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal_center", goal)
        object.__setattr__(self, "goal_radius", radius)
        lo = np.array([b.lo for b in obstacles], dtype=float).reshape(len(obstacles), d)
        hi = np.array([b.hi for b in obstacles], dtype=float).reshape(len(obstacles), d)
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "obs_lo", lo)
        object.__setattr__(self, "obs_hi", hi)
        if not point_free(self, start):
            raise GeometryError("start: not in free space (outside bounds or inside an obstacle)")
        for c, l, h in zip(goal, self.bounds.lo, self.bounds.hi):
            if c - radius < l - EPS or c + radius > h + EPS:
                raise GeometryError("goal: goal ball is not contained in the bounds")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def in_goal(self, x: Sequence[float]) -> bool:
        return distance(x, self.goal_center) <= self.goal_radius

    def diagonal(self) -> float:
        return distance(self.bounds.lo, self.bounds.hi)


def point_free(env: Environment, x: Sequence[float]) -> bool:
    if not env.bounds.contains(x):
        return False
    for box in env.obstacles:
        if box.contains(x):
            return False
    return True


def segment_hits_box(p0: Sequence[float], p1: Sequence[float], lo: Sequence[float], hi: Sequence[float]) -> bool:
    """Exact slab test of the closed segment p0-p1 against the closed box [lo, hi]."""
    t0, t1 = 0.0, 1.0
    for a, b, l, h in zip(p0, p1, lo, hi):
        dp = b - a
        if dp == 0.0:
            if a < l or a > h:
                return False
            continue
        ta = (l - a) / dp
        tb = (h - a) / dp
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return False
    return True


def segment_free(env: Environment, x1: Sequence[float], x2: Sequence[float]) -> bool:
    # bounds are convex, so both endpoints inside is enough
    if not (env.bounds.contains(x1) and env.bounds.contains(x2)):
        return False
    for box in env.obstacles:
        if segment_hits_box(x1, x2, box.lo, box.hi):
            return False
    return True


def nearest_obstacle(env: Environment, x: Sequence[float]) -> Tuple[float, State]:
    """Distance from ``x`` to the union of obstacle boxes and a closest point.

    Inside a box the distance is 0 and the closest point is ``x`` itself.
    Without obstacles the distance is +inf and ``x`` is returned.
    """
    best = math.inf
    closest = tuple(x)
    for box in env.obstacles:
        c = box.clamp(x)
        d = distance(x, c)
        if d < best:
            best, closest = d, c
            if d == 0.0:
                return 0.0, tuple(x)
    return best, closest


def unit_ball_volume(d: int) -> float:
    if d < 1:
        raise GeometryError("dimension must be >= 1")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def free_measure(env: Environment) -> float:
    """Volume of the bounds, used as an upper bound on the free-space measure."""
    return env.bounds.volume()
