"""Repeated trials, summary statistics and the grid shortest-path oracle."""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .geometry import Environment
from .planner import PlannerConfig, RunMetrics, plan
from .scenarios import Scenario

CSV_COLUMNS = ("environment", "algorithm", "n_min", "n_max", "n_avg",
               "t_min", "t_max", "t_avg", "c_star", "fail")
DEFAULT_NODE_CAP = 200_000
DEFAULT_EPS_CONV = 0.02
# iteration budget per trial, as a multiple of the node cap
ITERS_PER_NODE = 10
# the 8/26-connected lattice overestimates straight runs by at most this factor
OCTILE_SLACK = 0.08


class ResolutionError(ValueError):
    """The oracle grid is too coarse to connect start or goal."""


# -- grid oracle ------------------------------------------------------------------

def _segments_free(env: Environment, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized closed-box slab test; a, b have shape (n, d)."""
    ok = np.ones(len(a), dtype=bool)
    d = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
    for lo, hi in zip(env.obs_lo, env.obs_hi):
        # quick reject on the segment's bounding box
        cand = ok & np.all(np.minimum(a, b) <= hi, axis=1) & np.all(np.maximum(a, b) >= lo, axis=1)
        if not cand.any():
            continue
        idx = np.nonzero(cand)[0]
        aa, dd, ii = a[idx], d[idx], inv[idx]
        t0 = np.zeros(len(idx))
        t1 = np.ones(len(idx))
        hit = np.ones(len(idx), dtype=bool)
        for k in range(env.dim):
            par = dd[:, k] == 0.0
            inside = (aa[:, k] >= lo[k]) & (aa[:, k] <= hi[k])
            hit &= ~par | inside
            with np.errstate(invalid="ignore"):
                ta = (lo[k] - aa[:, k]) * ii[:, k]
                tb = (hi[k] - aa[:, k]) * ii[:, k]
            tmin = np.where(par, -np.inf, np.minimum(ta, tb))
            tmax = np.where(par, np.inf, np.maximum(ta, tb))
            t0 = np.maximum(t0, tmin)
            t1 = np.minimum(t1, tmax)
        hit &= t0 <= t1
        ok[idx[hit]] = False
    return ok


def _points_free(env: Environment, p: np.ndarray) -> np.ndarray:
    ok = np.all((p >= env.bounds.lo) & (p <= env.bounds.hi), axis=1)
    for lo, hi in zip(env.obs_lo, env.obs_hi):
        ok &= ~np.all((p >= lo) & (p <= hi), axis=1)
    return ok


def grid_oracle_cost(scenario, resolution: Optional[float] = None) -> float:
    """Shortest start-to-goal-region cost over a uniform lattice.

    Lattice nodes are joined to their 8 (2D) or 26 (3D) neighbours with exact
    Euclidean edge weights. The start joins the corners of its cell and lattice
    nodes near the goal finish with a straight run to the goal ball. The
    estimate overestimates the true optimum by at most the octile factor
    (about 8% in 2D) plus O(resolution).
    """
    env = scenario.env if isinstance(scenario, Scenario) else scenario
    if resolution is None:
        resolution = scenario.oracle_resolution if isinstance(scenario, Scenario) else 0.1
    if not resolution > 0:
        raise ResolutionError("resolution must be positive")
    return _oracle(env, float(resolution))


@lru_cache(maxsize=32)
def _oracle(env: Environment, h: float) -> float:
    d = env.dim
    lo = np.asarray(env.bounds.lo, dtype=float)
    hi = np.asarray(env.bounds.hi, dtype=float)
    shape = tuple(int(math.floor((hi[k] - lo[k]) / h + 1e-9)) + 1 for k in range(d))
    n = int(np.prod(shape))
    if n > 5_000_000:
        raise ResolutionError(f"{n} lattice nodes; use a coarser resolution")
    grids = np.meshgrid(*[lo[k] + h * np.arange(shape[k]) for k in range(d)], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    free = _points_free(env, pts)
    flat = np.arange(n).reshape(shape)

    rows, cols, wts = [], [], []
    for off in itertools.product((-1, 0, 1), repeat=d):
        if off <= (0,) * d:  # keep one of each +-pair
            continue
        src = tuple(slice(max(0, -o), s - max(0, o)) for o, s in zip(off, shape))
        dst = tuple(slice(max(0, o), s - max(0, -o)) for o, s in zip(off, shape))
        a = flat[src].ravel()
        b = flat[dst].ravel()
        keep = free[a] & free[b]
        a, b = a[keep], b[keep]
        keep = _segments_free(env, pts[a], pts[b])
        a, b = a[keep], b[keep]
        rows.append(a)
        cols.append(b)
        wts.append(np.full(len(a), h * math.sqrt(sum(o * o for o in off))))

    # start joins the corners of its cell
    start = np.asarray(env.start, dtype=float)
    base = np.floor((start - lo) / h + 1e-12).astype(int)
    corners = []
    for c in itertools.product((0, 1), repeat=d):
        idx = base + np.asarray(c)
        if np.all(idx >= 0) and np.all(idx < shape):
            corners.append(int(flat[tuple(idx)]))
    corners = np.array([c for c in corners if free[c]], dtype=int)
    if len(corners):
        ok = _segments_free(env, np.repeat(start[None], len(corners), 0), pts[corners])
        corners = corners[ok]
    if not len(corners):
        raise ResolutionError("start cell is blocked at this resolution")
    s = n
    rows.append(np.full(len(corners), s))
    cols.append(corners)
    wts.append(np.linalg.norm(pts[corners] - start, axis=1))

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    wts = np.concatenate(wts)
    g = coo_matrix((wts, (rows, cols)), shape=(n + 1, n + 1)).tocsr()
    dist = dijkstra(g, directed=False, indices=s)[:n]

    # finish: straight run from a nearby free node onto the goal ball
    c = np.asarray(env.goal_center, dtype=float)
    r = env.goal_radius
    gap = np.linalg.norm(pts - c, axis=1)
    near = np.nonzero(free & (gap <= r + 2 * h * math.sqrt(d)) & np.isfinite(dist))[0]
    if not len(near):
        raise ResolutionError("goal region is not reachable on the lattice")
    run = np.maximum(gap[near] - r, 0.0)
    scale = np.where(gap[near] > 0, run / np.where(gap[near] > 0, gap[near], 1.0), 0.0)
    entry = pts[near] + (c - pts[near]) * scale[:, None]
    ok = _segments_free(env, pts[near], entry)
    total = dist[near] + run
    total[~ok] = np.inf
    best = float(total.min())
    if not math.isfinite(best):
        raise ResolutionError("goal region is not reachable on the lattice")
    return best


# -- statistics -------------------------------------------------------------------

@dataclass
class StatRow:
    environment: str
    algorithm: str
    n_min: Optional[int]
    n_max: Optional[int]
    n_avg: Optional[float]
    t_min: Optional[float]
    t_max: Optional[float]
    t_avg: Optional[float]
    c_star: Optional[float]
    fail_count: int
    repeats: int

    def csv_row(self) -> List[str]:
        def f(x, spec):
            return "-" if x is None else format(x, spec)
        return [self.environment, self.algorithm,
                f(self.n_min, "d"), f(self.n_max, "d"), f(self.n_avg, ".1f"),
                f(self.t_min, ".4f"), f(self.t_max, ".4f"), f(self.t_avg, ".4f"),
                f(self.c_star, ".3f"), str(self.fail_count)]


def summarize(environment: str, algorithm: str, raw: Sequence[RunMetrics]) -> StatRow:
    ok = [m for m in raw if not m.failed]
    fail = len(raw) - len(ok)
    if not ok:
        return StatRow(environment, algorithm, None, None, None, None, None, None, None, fail, len(raw))
    n = [m.iters_opt if m.iters_opt is not None else m.iters_first for m in ok]
    t = [m.time_opt if m.time_opt is not None else m.time_first for m in ok]
    c = [m.final_cost for m in ok]
    return StatRow(environment, algorithm, min(n), max(n), statistics.fmean(n),
                   min(t), max(t), statistics.fmean(t), statistics.fmean(c), fail, len(raw))


def write_csv(rows: Iterable[StatRow], out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    return text


def convergence_rate(m: RunMetrics) -> Optional[float]:
    """Cost drop per second between the first path and convergence."""
    if m.iters_first is None or m.iters_opt is None or m.time_first is None or m.time_opt is None:
        return None
    dt = m.time_opt - m.time_first
    if dt <= 0:
        return None
    c_opt = next((c for it, c in m.cost_history if it >= m.iters_opt), m.final_cost)
    return (m.cost_first - c_opt) / dt


def trial_config(cfg: PlannerConfig, seed: int, node_cap: int, target: float) -> PlannerConfig:
    return replace(cfg, seed=seed, node_cap=node_cap, max_iters=max(cfg.max_iters, ITERS_PER_NODE * node_cap),
                   target_cost=target, stop_at_target=True)


def _run_one(args) -> RunMetrics:
    env, cfg = args
    return plan(env, cfg)[1]


def run_trials(scenario: Scenario, cfg: PlannerConfig, repeats: int, base_seed: int = 0, *,
               node_cap: int = DEFAULT_NODE_CAP, eps_conv: Optional[float] = DEFAULT_EPS_CONV,
               oracle: Optional[float] = None, serial: bool = False,
               workers: Optional[int] = None) -> Tuple[StatRow, List[RunMetrics]]:
    """Run seeds base_seed..base_seed+repeats-1 and aggregate.

    With ``eps_conv`` set, a trial converges once its best cost is within
    (1 + eps_conv) of the oracle cost and stops there. With ``eps_conv=None``
    the first feasible path counts instead.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    target = math.inf  # first feasible path
    if eps_conv is not None:
        if oracle is None:
            oracle = grid_oracle_cost(scenario)
        target = (1.0 + eps_conv) * oracle
    jobs = [(scenario.env, trial_config(cfg, base_seed + i, node_cap, target)) for i in range(repeats)]
    if serial or repeats == 1:
        raw = [_run_one(j) for j in jobs]
    else:
        workers = workers or min(repeats, os.cpu_count() or 1)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            raw = list(ex.map(_run_one, jobs))
    return summarize(scenario.name, cfg.variant, raw), raw


def median_iterations(raw: Sequence[RunMetrics], cap: float) -> float:
    """Median iterations to convergence, failures counted at ``cap``."""
    return statistics.median(m.iters_opt if m.iters_opt is not None else cap for m in raw)


def windowed_ratio(marks_a: Sequence[Tuple[int, float]], marks_b: Sequence[Tuple[int, float]],
                   start: int, stop: int, windows: int = 10) -> List[float]:
    """Per-window time ratio a/b from (iteration, elapsed) marks."""
    ta, tb = dict(marks_a), dict(marks_b)
    edges = np.linspace(start, stop, windows + 1)
    out = []
    keys = sorted(set(ta) & set(tb))
    for lo, hi in zip(edges[:-1], edges[1:]):
        ks = [k for k in keys if lo <= k <= hi]
        if len(ks) < 2:
            continue
        da = ta[ks[-1]] - ta[ks[0]]
        db = tb[ks[-1]] - tb[ks[0]]
        if db > 0:
            out.append(da / db)
    return out


def coefficient_of_variation(xs: Sequence[float]) -> float:
    mu = statistics.fmean(xs)
    return statistics.pstdev(xs) / mu if mu else math.inf
