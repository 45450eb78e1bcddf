"""Pick the compiled planning kernel when it is importable.

Set ``PRRTSTAR_PURE_PYTHON=1`` to force the pure-Python loop.
"""
from __future__ import annotations

import os
import time

try:
    if os.environ.get("PRRTSTAR_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure Python forced")
    from . import _ckernels
except ImportError:  # pragma: no cover - exercised when the extension is absent
    _ckernels = None


def compiled_available() -> bool:
    return _ckernels is not None


def name() -> str:
    return "compiled" if _ckernels is not None else "python"


def world(env):
    return _ckernels.World(env.bounds.lo, env.bounds.hi, env.obs_lo.tolist(), env.obs_hi.tolist(),
                           env.goal_center, env.goal_radius)


def plan_compiled(env, cfg, gamma):
    from .planner import DegenerateEnvironment, PlannerError, Tree, _Tracker, cells_per_axis
    from .rng import UniformStream

    if env.dim > 8:
        raise PlannerError("the compiled kernel supports d <= 8")
    kino = cfg.steering == "differential_drive"
    w = world(env)
    cap = cfg.node_cap or cfg.max_iters + 1
    st = _ckernels.Store(env.dim, cells_per_axis(env, cap), env.bounds.lo, env.bounds.hi)
    prims = None
    if kino:
        p = cfg.drive.primitives
        prims = _ckernels.Prims(p.rel.copy(), p.arc.copy(), p.reach)
    stream = UniformStream(cfg.seed)
    t0 = time.perf_counter()
    tr = _Tracker(cfg, t0)
    try:
        it = _ckernels.plan_loop(
            w, st, stream, tr, env.start,
            variant_prrt=int(cfg.variant == "p_rrt_star"), gamma=gamma,
            max_iters=cfg.max_iters, node_cap=-1 if cfg.node_cap is None else cfg.node_cap,
            goal_bias=cfg.goal_bias, rgd_k=cfg.rgd.k, rgd_lam=cfg.rgd.lam,
            rgd_dobs=cfg.rgd.d_obs_star, rgd_raw=cfg.rgd.raw_force,
            max_edge=-1.0 if cfg.max_edge is None else cfg.max_edge,
            time_stride=cfg.time_stride, prims=prims, start_heading=cfg.start_heading,
            perf_counter=time.perf_counter)
    except RuntimeError as e:
        if str(e) == "degenerate":
            raise DegenerateEnvironment("no free sample in 1000000 rejection attempts") from None
        raise
    pts, parent, cost, edge, heading, prim = st.arrays()
    if kino:
        tree = Tree.from_arrays(pts, parent, cost, edge, heading, prim)
    else:
        tree = Tree.from_arrays(pts, parent, cost, edge)
    return tree, tr, it, t0
