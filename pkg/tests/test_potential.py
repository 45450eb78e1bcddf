import math

import numpy as np
import pytest

from prrtstar import _backend
from prrtstar.geometry import Aabb, Environment, distance, nearest_obstacle, point_free, segment_free
from prrtstar.potential import (ApfConfig, Outcome, PotentialError, RgdConfig, att_force, att_potential,
                                gradient_descent, rep_force, rep_potential, rgd)


def world(*boxes, start=(1.0, 1.0), goal=(19.0, 19.0), r=0.5, size=20.0):
    return Environment(Aabb((0.0, 0.0), (size, size)), tuple(Aabb(*b) for b in boxes), start, goal, r)


def test_att_examples():
    cfg = ApfConfig(k_a=1.0, d_g_star=1.0)
    assert att_potential((3.0, 4.0), (0.0, 0.0), cfg) == pytest.approx(25.0)
    assert att_potential((0.0, 0.0), (0.0, 0.0), cfg) == pytest.approx(-1.0)
    assert att_force((3.0, 0.0), (0.0, 0.0), cfg) == pytest.approx((-6.0, 0.0))
    assert att_force((0.0, 0.0), (0.0, 0.0), cfg) == (0.0, 0.0)


def test_rep_examples():
    env = world(((10, 0), (20, 20)))
    cfg = ApfConfig(k_r=2.0, d_obs_star=1.0)
    assert rep_potential(env, (9.5, 5.0), cfg) == pytest.approx(1.0)
    assert rep_potential(env, (5.0, 5.0), cfg) == 0.0
    assert rep_force(env, (5.0, 5.0), cfg) == (0.0, 0.0)
    assert rep_potential(env, (10.0, 5.0), cfg) == math.inf
    with pytest.raises(PotentialError):
        rep_force(env, (10.0, 5.0), cfg)
    mags = [abs(rep_force(env, (10.0 - f, 5.0), cfg)[0]) for f in (0.5, 0.25, 0.125)]
    assert mags[0] < mags[1] < mags[2]
    # pushes away from the wall
    assert rep_force(env, (9.5, 5.0), cfg)[0] < 0


def _fd_grad(f, x, h):
    g = []
    for i in range(len(x)):
        xp = list(x)
        xm = list(x)
        xp[i] += h
        xm[i] -= h
        g.append((f(xp) - f(xm)) / (2 * h))
    return np.array(g)


def _rel_err(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300)


@pytest.mark.property
def test_att_force_is_negative_gradient(rng):
    cfg = ApfConfig(k_a=1.7, d_g_star=2.0)
    g = np.array([4.0, -1.0, 2.5])
    n = 0
    while n < 500:
        x = g + rng.normal(size=3) * 3
        if abs(np.linalg.norm(x - g) - cfg.d_g_star) < 1e-3 or np.linalg.norm(x - g) < 1e-3:
            continue  # switch shell and pole
        fd = -_fd_grad(lambda y: att_potential(y, g, cfg), list(x), 1e-6)
        assert _rel_err(fd, att_force(x, g, cfg)) < 1e-5
        n += 1


@pytest.mark.property
def test_rep_force_is_negative_gradient(rng):
    box = ((4.0, 4.0), (6.0, 7.0))
    env = world(box)
    cfg = ApfConfig(k_r=3.0, d_obs_star=2.5)
    n = 0
    while n < 500:
        x = rng.uniform(1.5, 8.5, 2)
        d, _ = nearest_obstacle(env, x)
        if not 0.05 < d < cfg.d_obs_star - 1e-3:
            continue
        # stay clear of the planes where the closest feature switches
        if min(abs(x[0] - 4), abs(x[0] - 6), abs(x[1] - 4), abs(x[1] - 7)) < 1e-3:
            continue
        fd = -_fd_grad(lambda y: rep_potential(env, y, cfg), list(x), 1e-7)
        assert _rel_err(fd, rep_force(env, x, cfg)) < 1e-5
        n += 1


def test_gradient_descent_examples():
    env = world(start=(2.0, 10.0), goal=(18.0, 10.0))
    cfg = ApfConfig(k_r=5.0, d_obs_star=2.0, lam=0.1)
    path, out = gradient_descent(env, cfg)
    assert out == Outcome.REACHED_GOAL
    dists = [distance(p, env.goal_center) for p in path]
    assert all(a > b for a, b in zip(dists, dists[1:]))

    trap = world(((12, 5), (13, 15)), ((8, 5), (13, 6)), ((8, 14), (13, 15)),
                 start=(2.0, 10.0), goal=(18.0, 10.0))
    path, out = gradient_descent(trap, cfg)
    assert out == Outcome.LOCAL_MINIMUM
    assert not trap.in_goal(path[-1])

    path, out = gradient_descent(env, ApfConfig(max_steps=0))
    assert out == Outcome.STEP_LIMIT and len(path) == 1


def test_apf_config_validation():
    with pytest.raises(PotentialError):
        ApfConfig(k_a=0.0)
    with pytest.raises(PotentialError):
        ApfConfig(lam=5.0).check_env(world(size=20.0))
    with pytest.warns(UserWarning):
        RgdConfig(k=20)
    with pytest.raises(PotentialError):
        RgdConfig(lam=-1.0)


def test_rgd_examples():
    env = Environment(Aabb((-5.0, -5.0), (20.0, 5.0)), (), (0.0, 0.0), (10.0, 0.0), 0.5)
    out = rgd((0.0, 0.0), env, env.goal_center, RgdConfig())
    assert out[0] == pytest.approx(9.0, abs=1e-9) and out[1] == 0.0
    with pytest.warns(UserWarning):
        k0 = RgdConfig(k=0)
    assert rgd((0.0, 0.0), env, env.goal_center, k0) == (0.0, 0.0)
    near_goal = (9.95, 0.0)
    assert rgd(near_goal, env, env.goal_center, RgdConfig()) == (10.0, 0.0)

    walled = Environment(Aabb((0.0, 0.0), (20.0, 10.0)), (Aabb((5.0, 0.0), (6.0, 10.0)),),
                         (1.0, 5.0), (18.0, 5.0), 0.5)
    x = (4.95, 5.0)  # within d_obs of the wall
    assert rgd(x, walled, walled.goal_center, RgdConfig()) == x
    with pytest.raises(PotentialError):
        rgd((5.5, 5.0), walled, walled.goal_center, RgdConfig())


def _rgd_impls():
    impls = [("python", lambda x, env, cfg: rgd(x, env, env.goal_center, cfg))]
    if _backend.compiled_available():
        def compiled(x, env, cfg):
            w = _backend.world(env)
            return tuple(_backend._ckernels.rgd_point(w, x, cfg.k, cfg.lam, cfg.d_obs_star, cfg.raw_force))
        impls.append(("compiled", compiled))
    return impls


@pytest.mark.property
@pytest.mark.parametrize("name,fn", _rgd_impls())
def test_rgd_properties(name, fn, rng):
    cfg = RgdConfig()
    cluttered = world(((4, 4), (6, 9)), ((9, 2), (10, 12)), ((12, 13), (17, 14)), ((14, 4), (15, 10)))
    empty = world()
    for _ in range(2000):
        x = tuple(rng.uniform(0, 20, 2))
        if not point_free(cluttered, x):
            continue
        y = fn(x, cluttered, cfg)
        assert point_free(cluttered, y)
        assert segment_free(cluttered, x, y)
        assert distance(x, y) <= cfg.k * cfg.lam + 1e-9
        assert distance(y, cluttered.goal_center) <= distance(x, cluttered.goal_center) + 1e-12
        if nearest_obstacle(cluttered, x)[0] <= cfg.d_obs_star:
            assert y == x
    for _ in range(500):
        x = tuple(rng.uniform(0, 20, 2))
        y = fn(x, empty, cfg)
        d0 = distance(x, empty.goal_center)
        # unobstructed: advances exactly min(k lam, d) toward the goal
        assert distance(y, empty.goal_center) == pytest.approx(max(0.0, d0 - cfg.k * cfg.lam), abs=1e-9)


def test_rgd_descent_is_monotone():
    env = world()
    with pytest.warns(UserWarning):
        cfg = RgdConfig(k=1, lam=0.1)
    x = (1.0, 2.0)
    last = distance(x, env.goal_center)
    for _ in range(400):
        x = rgd(x, env, env.goal_center, cfg)
        d = distance(x, env.goal_center)
        assert d < last or d == 0.0
        last = d
    assert last == 0.0
