"""Differential-drive (unicycle) steering: RK4 integration, control sampling and
trajectory validation.

The unicycle dynamics are translation and rotation equivariant, so each
(v, omega) control is integrated once from the identity pose into a motion
primitive and re-posed for every extension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Environment, segment_hits_box, distance

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.remainder(theta, TWO_PI)
    if t <= -math.pi:
        t += TWO_PI
    return t


@dataclass(frozen=True)
class DriveState:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class DriveModel:
    v_max: float = 1.0
    w_max: float = 1.5
    dt: float = 0.02
    duration: float = 0.5
    control_grid: int = 7

    def __post_init__(self):
        if not (self.v_max > 0 and self.w_max > 0 and self.dt > 0 and self.duration > 0):
            raise ValueError("drive model parameters must be positive")
        if self.dt > self.duration:
            raise ValueError("dt must not exceed duration")
        if self.control_grid < 2:
            raise ValueError("control_grid must be >= 2")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.duration / self.dt)))

    def controls(self) -> List[Tuple[float, float]]:
        g = self.control_grid
        vs = [-self.v_max + 2.0 * self.v_max * i / (g - 1) for i in range(g)]
        ws = [-self.w_max + 2.0 * self.w_max * i / (g - 1) for i in range(g)]
        return [(v, w) for v in vs for w in ws]

    @cached_property
    def primitives(self) -> "Primitives":
        return Primitives.build(self)


def _deriv(theta, v, w):
    return v * math.cos(theta), v * math.sin(theta), w


def rk4_step(s: DriveState, control: Tuple[float, float], dt: float) -> DriveState:
    x, y, th = s.x, s.y, s.theta
    v, w = control
    k1 = _deriv(th, v, w)
    k2 = _deriv(th + 0.5 * dt * k1[2], v, w)
    k3 = _deriv(th + 0.5 * dt * k2[2], v, w)
    k4 = _deriv(th + dt * k3[2], v, w)
    c = dt / 6.0
    return DriveState(
        x + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        th + c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    )


def integrate(s: DriveState, control: Tuple[float, float], dt: float, n: int) -> List[DriveState]:
    out = [s]
    for _ in range(n):
        s = rk4_step(s, control, dt)
        out.append(s)
    return out


@dataclass(frozen=True)
class Primitives:
    """Trajectories of every grid control from the identity pose.

    ``rel`` has shape (P, S+1, 3) with columns (x, y, unwrapped heading).
    """
    controls: Tuple[Tuple[float, float], ...]
    rel: np.ndarray
    arc: np.ndarray
    reach: float

    @classmethod
    def build(cls, model: DriveModel) -> "Primitives":
        ctrls = tuple(model.controls())
        n = model.n_steps
        rel = np.zeros((len(ctrls), n + 1, 3))
        arc = np.zeros(len(ctrls))
        for p, (v, w) in enumerate(ctrls):
            x = y = th = 0.0
            length = 0.0
            for i in range(1, n + 1):
                # unwrapped heading so re-posing needs one wrap at the end
                k1 = _deriv(th, v, w)
                k2 = _deriv(th + 0.5 * model.dt * k1[2], v, w)
                k3 = _deriv(th + 0.5 * model.dt * k2[2], v, w)
                k4 = _deriv(th + model.dt * k3[2], v, w)
                c = model.dt / 6.0
                nx = x + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
                ny = y + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
                th = th + c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
                length += math.sqrt((nx - x) * (nx - x) + (ny - y) * (ny - y))
                x, y = nx, ny
                rel[p, i] = (x, y, th)
            arc[p] = length
        reach = float(np.sqrt(rel[:, -1, 0] ** 2 + rel[:, -1, 1] ** 2).max())
        rel.setflags(write=False)
        arc.setflags(write=False)
        return cls(ctrls, rel, arc, reach)

    def pose(self, p: int, s: DriveState) -> List[DriveState]:
        """Primitive ``p`` re-posed to start at ``s``."""
        c, sn = math.cos(s.theta), math.sin(s.theta)
        return [DriveState(s.x + (c * rx - sn * ry), s.y + (sn * rx + c * ry), s.theta + rt)
                for rx, ry, rt in self.rel[p]]

    def endpoint(self, p: int, s: DriveState) -> Tuple[float, float]:
        c, sn = math.cos(s.theta), math.sin(s.theta)
        rx, ry = self.rel[p, -1, 0], self.rel[p, -1, 1]
        return (s.x + (c * rx - sn * ry), s.y + (sn * rx + c * ry))


def trajectory_free(env: Environment, traj: Sequence[DriveState]) -> bool:
    """Swept bounding box first; per-segment slab tests only against obstacles
    the box touches."""
    xs = [s.x for s in traj]
    ys = [s.y for s in traj]
    lo = (min(xs), min(ys))
    hi = (max(xs), max(ys))
    b = env.bounds
    if lo[0] < b.lo[0] or lo[1] < b.lo[1] or hi[0] > b.hi[0] or hi[1] > b.hi[1]:
        return False
    for box in env.obstacles:
        if hi[0] < box.lo[0] or lo[0] > box.hi[0] or hi[1] < box.lo[1] or lo[1] > box.hi[1]:
            continue
        if len(traj) == 1:
            if box.contains(traj[0].position):
                return False
            continue
        for a, c in zip(traj, traj[1:]):
            if segment_hits_box(a.position, c.position, box.lo, box.hi):
                return False
    return True


@dataclass(frozen=True)
class SteerResult:
    traj: List[DriveState]
    end: DriveState
    cost: float
    primitive: int


def steer(start: DriveState, toward: Sequence[float], model: DriveModel, env: Environment
          ) -> Optional[SteerResult]:
    """Best collision-free primitive from ``start``: the one whose endpoint lands
    nearest to ``toward`` (heading at the target is ignored). ``None`` when
    every primitive collides."""
    prims = model.primitives
    order = sorted(range(len(prims.controls)),
                   key=lambda p: (distance(prims.endpoint(p, start), toward), p))
    for p in order:
        traj = prims.pose(p, start)
        if trajectory_free(env, traj):
            return SteerResult(traj, traj[-1], float(prims.arc[p]), p)
    return None


def constraint_residual(traj: Sequence[DriveState]) -> float:
    """Largest violation of sin(theta) dx - cos(theta) dy = 0 between
    consecutive states, using the midpoint heading."""
    if len(traj) < 2:
        raise ValueError("need at least two states")
    worst = 0.0
    for a, b in zip(traj, traj[1:]):
        th = a.theta + 0.5 * wrap_angle(b.theta - a.theta)
        r = abs(math.sin(th) * (b.x - a.x) - math.cos(th) * (b.y - a.y))
        worst = max(worst, r)
    return worst
