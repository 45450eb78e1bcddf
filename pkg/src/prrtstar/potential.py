"""Artificial potential fields, the APF gradient-descent planner and the
randomized gradient descent (RGD) sample transform used by P-RRT*.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .geometry import Environment, State, distance, nearest_obstacle, point_free, segment_free


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class ApfConfig:
    k_a: float = 1.0
    k_r: float = 1.0
    d_g_star: float = 1.0
    d_obs_star: float = 2.0
    lam: float = 0.1
    max_steps: int = 5000
    # stall window for local-minimum detection, in steps
    stall_window: int = 20

    def __post_init__(self):
        for name in ("k_a", "k_r", "d_g_star", "d_obs_star", "lam"):
            if not getattr(self, name) > 0:
                raise PotentialError(f"{name} must be positive")
        if self.max_steps < 0:
            raise PotentialError("max_steps must be >= 0")

    def check_env(self, env: Environment):
        if not self.lam < 0.1 * env.diagonal():
            raise PotentialError("lam must be small relative to the world (< 0.1 x bounds diagonal)")


@dataclass(frozen=True)
class RgdConfig:
    k: int = 90
    lam: float = 0.1
    d_obs_star: float = 0.1
    raw_force: bool = False

    def __post_init__(self):
        if not 0 <= self.k <= 10_000:
            raise PotentialError("k must lie in [0, 10000]")
        if not (self.lam > 0 and self.d_obs_star > 0):
            raise PotentialError("lam and d_obs_star must be positive")
        if not 80 <= self.k <= 100:
            warnings.warn(f"rgd k={self.k} is outside the recommended range 80-100", stacklevel=3)


# -- attractive field ---------------------------------------------------------

def att_potential(x: Sequence[float], x_g: Sequence[float], cfg: ApfConfig) -> float:
    d = distance(x, x_g)
    if d > cfg.d_g_star:
        return cfg.k_a * d * d
    return cfg.k_a * (cfg.d_g_star * d - cfg.d_g_star ** 2)


def att_force(x: Sequence[float], x_g: Sequence[float], cfg: ApfConfig) -> State:
    """Negative gradient of :func:`att_potential` (zero at the goal itself)."""
    d = distance(x, x_g)
    if d > cfg.d_g_star:
        return tuple(-2.0 * cfg.k_a * (a - b) for a, b in zip(x, x_g))
    if d == 0.0:
        return tuple(0.0 for _ in x)
    s = -cfg.k_a * cfg.d_g_star / d
    return tuple(s * (a - b) for a, b in zip(x, x_g))


# -- repulsive field ----------------------------------------------------------

def rep_potential(env: Environment, x: Sequence[float], cfg: ApfConfig) -> float:
    d_min, _ = nearest_obstacle(env, x)
    if d_min > cfg.d_obs_star:
        return 0.0
    if d_min == 0.0:
        return math.inf
    t = 1.0 / d_min - 1.0 / cfg.d_obs_star
    return 0.5 * cfg.k_r * t * t


def rep_force(env: Environment, x: Sequence[float], cfg: ApfConfig) -> State:
    d_min, closest = nearest_obstacle(env, x)
    if d_min > cfg.d_obs_star:
        return tuple(0.0 for _ in x)
    if d_min == 0.0:
        raise PotentialError("repulsive force is singular on an obstacle")
    s = cfg.k_r * (1.0 / d_min - 1.0 / cfg.d_obs_star) / (d_min * d_min) / d_min
    return tuple(s * (a - b) for a, b in zip(x, closest))


def total_force(env: Environment, x: Sequence[float], cfg: ApfConfig) -> State:
    fa = att_force(x, env.goal_center, cfg)
    fr = rep_force(env, x, cfg)
    return tuple(a + b for a, b in zip(fa, fr))


# -- APF planner --------------------------------------------------------------

class Outcome(str, enum.Enum):
    REACHED_GOAL = "reached-goal"
    LOCAL_MINIMUM = "local-minimum"
    STEP_LIMIT = "step-limit"


def gradient_descent(env: Environment, cfg: ApfConfig, start: Sequence[float] | None = None
                     ) -> Tuple[List[State], Outcome]:
    """Follow the total force from ``start`` in steps of length ``cfg.lam``.

    A vanishing force, a blocked step, or no net progress over the stall
    window (the fixed-step iterate oscillating around a minimum) all count as
    a local minimum.
    """
    x = tuple(env.start if start is None else start)
    path = [x]
    if env.in_goal(x):
        return path, Outcome.REACHED_GOAL
    w = cfg.stall_window
    for _ in range(cfg.max_steps):
        f = total_force(env, x, cfg)
        norm = math.sqrt(sum(c * c for c in f))
        if norm < 1e-6:
            return path, Outcome.LOCAL_MINIMUM
        step = cfg.lam
        nxt = None
        for _halving in range(4):
            cand = tuple(a + step * c / norm for a, c in zip(x, f))
            if segment_free(env, x, cand):
                nxt = cand
                break
            step *= 0.5
        if nxt is None:
            return path, Outcome.LOCAL_MINIMUM
        x = nxt
        path.append(x)
        if env.in_goal(x):
            return path, Outcome.REACHED_GOAL
        if len(path) > w and distance(path[-1], path[-1 - w]) < cfg.lam:
            return path, Outcome.LOCAL_MINIMUM
    return path, Outcome.STEP_LIMIT


# -- randomized gradient descent ---------------------------------------------

def rgd(x_rand: Sequence[float], env: Environment, goal: Sequence[float], cfg: RgdConfig) -> State:
    """Push a free sample down the quadratic attractive field toward ``goal``.

    Up to ``cfg.k`` steps of length ``cfg.lam`` (the last one clamped so the
    sample stops on the goal instead of overshooting). Returns as soon as the
    sample is within ``cfg.d_obs_star`` of an obstacle, or when a step would
    leave free space.
    """
    if not point_free(env, x_rand):
        raise PotentialError("rgd input must lie in free space")
    x = tuple(x_rand)
    for _ in range(cfg.k):
        d_min, _ = nearest_obstacle(env, x)
        if d_min <= cfg.d_obs_star:
            return x
        d = distance(x, goal)
        if d == 0.0:
            return x
        if cfg.raw_force:
            cand = tuple(a + cfg.lam * 2.0 * (g - a) for a, g in zip(x, goal))
        elif d <= cfg.lam:
            cand = tuple(goal)
        else:
            s = cfg.lam / d
            cand = tuple(a + s * (g - a) for a, g in zip(x, goal))
        if not segment_free(env, x, cand):
            return x
        x = cand
    return x
