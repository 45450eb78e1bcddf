"""RRT* and P-RRT*.

The building blocks (``extend_to``, ``get_tuple``, ``select_best_parent``,
``rewire``) operate on :class:`Tree` and are what the pure-Python loop is made
of. ``plan`` hands the loop to the compiled kernel when it is available; both
loops consume the same random stream and make the same floating-point
decisions, so they build identical trees.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import _backend
from .geometry import Environment, State, distance, point_free, segment_free
from .kinodynamic import DriveModel, DriveState, Primitives, trajectory_free
from .potential import ApfConfig, Outcome, RgdConfig, gradient_descent, rgd
from .rng import UniformStream
from .spatial_index import GridIndex, LinearIndex, gamma_star, near_radius

VARIANTS = ("rrt_star", "p_rrt_star", "apf")
STEERING = ("holonomic", "differential_drive")
MAX_REJECTIONS = 1_000_000


class PlannerError(RuntimeError):
    pass


class DegenerateEnvironment(PlannerError):
    pass


def node_bytes(d: int) -> int:
    """Bytes attributed to one vertex in memory reports: d coordinates, cost,
    edge length (8 bytes each), parent id and child-list links (3 x 8)."""
    return 8 * d + 16 + 24


@dataclass(frozen=True)
class PlannerConfig:
    variant: str = "rrt_star"
    gamma: Optional[float] = None
    gamma_factor: float = 1.1
    max_iters: int = 2000
    rgd: RgdConfig = field(default_factory=RgdConfig)
    seed: int = 0
    goal_bias: float = 0.0
    steering: str = "holonomic"
    drive: DriveModel = field(default_factory=DriveModel)
    start_heading: float = 0.0
    node_cap: Optional[int] = None
    target_cost: Optional[float] = None
    stop_at_target: bool = False
    max_edge: Optional[float] = None
    apf: ApfConfig = field(default_factory=ApfConfig)
    # record a timestamp every this many iterations (0 = off)
    time_stride: int = 0
    backend: str = "auto"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise PlannerError(f"unknown variant {self.variant!r}")
        if self.steering not in STEERING:
            raise PlannerError(f"unknown steering {self.steering!r}")
        if self.max_iters < 0:
            raise PlannerError("max_iters must be >= 0")
        if not 0.0 <= self.goal_bias < 1.0:
            raise PlannerError("goal_bias must lie in [0, 1)")
        if self.gamma is not None and not self.gamma > 0:
            raise PlannerError("gamma must be positive")
        if self.max_edge is not None and not self.max_edge > 0:
            raise PlannerError("max_edge must be positive")
        if self.backend not in ("auto", "compiled", "python"):
            raise PlannerError(f"unknown backend {self.backend!r}")

    def resolve_gamma(self, env: Environment) -> float:
        gs = gamma_star(env)
        if self.gamma is None:
            return self.gamma_factor * gs
        if self.gamma <= gs:
            warnings.warn(f"gamma={self.gamma:.4g} does not exceed gamma*={gs:.4g}", stacklevel=3)
        return self.gamma


@dataclass
class RunMetrics:
    iters_first: Optional[int] = None
    time_first: Optional[float] = None
    iters_opt: Optional[int] = None
    time_opt: Optional[float] = None
    cost_history: List[Tuple[int, float]] = field(default_factory=list)
    final_cost: Optional[float] = None
    node_count: int = 0
    failed: bool = True
    iterations: int = 0
    time_total: float = 0.0
    time_marks: List[Tuple[int, float]] = field(default_factory=list)
    bytes_per_node: int = 0
    outcome: Optional[str] = None

    @property
    def memory_bytes(self) -> int:
        return self.node_count * self.bytes_per_node

    @property
    def cost_first(self) -> Optional[float]:
        return self.cost_history[0][1] if self.cost_history else None

    def deterministic_view(self) -> dict:
        """Everything except wall-clock fields."""
        return {
            "iters_first": self.iters_first,
            "iters_opt": self.iters_opt,
            "cost_history": list(self.cost_history),
            "final_cost": self.final_cost,
            "node_count": self.node_count,
            "failed": self.failed,
            "iterations": self.iterations,
        }

    def as_dict(self) -> dict:
        out = self.deterministic_view()
        out.update(time_first=self.time_first, time_opt=self.time_opt,
                   time_total=self.time_total, memory_bytes=self.memory_bytes)
        out["cost_history"] = [list(p) for p in self.cost_history]
        return out


# -- tree ---------------------------------------------------------------------

class Tree:
    """Rooted tree with parent links, per-vertex cost-to-come and child lists.

    ``edge[v]`` caches the length of the edge parent(v) -> v so cost updates
    after rewiring are a single addition per descendant. Kinodynamic trees also
    carry a heading and the primitive that produced each vertex.
    """

    def __init__(self, root: Sequence[float], heading: Optional[float] = None):
        self.points: List[State] = [tuple(float(c) for c in root)]
        self.parent: List[int] = [-1]
        self.cost: List[float] = [0.0]
        self.edge: List[float] = [0.0]
        self.children: List[List[int]] = [[]]
        self.headings: Optional[List[float]] = None if heading is None else [DriveState(0, 0, heading).theta]
        self.primitive: Optional[List[int]] = None if heading is None else [-1]

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return len(self.points[0])

    @property
    def kinodynamic(self) -> bool:
        return self.headings is not None

    def add(self, x: Sequence[float], parent: int, edge: float, heading: float = None, primitive: int = -1) -> int:
        v = len(self.points)
        self.points.append(tuple(x))
        self.parent.append(parent)
        self.edge.append(edge)
        self.cost.append(self.cost[parent] + edge)
        self.children.append([])
        self.children[parent].append(v)
        if self.headings is not None:
            self.headings.append(heading)
            self.primitive.append(primitive)
        return v

    def reparent(self, v: int, new_parent: int, edge: float):
        self.children[self.parent[v]].remove(v)
        self.parent[v] = new_parent
        self.children[new_parent].append(v)
        self.edge[v] = edge
        self.cost[v] = self.cost[new_parent] + edge
        stack = [v]
        while stack:
            u = stack.pop()
            cu = self.cost[u]
            for c in self.children[u]:
                self.cost[c] = cu + self.edge[c]
                stack.append(c)

    def state(self, v: int) -> DriveState:
        x, y = self.points[v]
        return DriveState(x, y, self.headings[v])

    def path_to(self, v: int) -> List[int]:
        out = []
        while v != -1:
            out.append(v)
            v = self.parent[v]
        return out[::-1]

    def edge_trajectory(self, v: int, prims: Primitives) -> List[DriveState]:
        return prims.pose(self.primitive[v], self.state(self.parent[v]))

    @classmethod
    def from_arrays(cls, points, parent, cost, edge, headings=None, primitive=None) -> "Tree":
        t = cls.__new__(cls)
        t.points = [tuple(p) for p in np.asarray(points).tolist()]
        t.parent = np.asarray(parent).tolist()
        t.cost = np.asarray(cost).tolist()
        t.edge = np.asarray(edge).tolist()
        t.children = [[] for _ in t.points]
        for v, p in enumerate(t.parent):
            if p >= 0:
                t.children[p].append(v)
        t.headings = None if headings is None else np.asarray(headings).tolist()
        t.primitive = None if primitive is None else np.asarray(primitive).tolist()
        return t

    def check_invariants(self, env: Environment, prims: Optional[Primitives] = None, tol: float = 1e-9):
        """Raise AssertionError when a structural or cost invariant is broken."""
        roots = [v for v, p in enumerate(self.parent) if p == -1]
        assert roots == [0], f"expected a single root 0, got {roots}"
        assert self.cost[0] == 0.0
        depth_ok = [False] * len(self)
        depth_ok[0] = True
        for v in range(len(self)):
            seen = []
            u = v
            while not depth_ok[u]:
                seen.append(u)
                u = self.parent[u]
                assert u != -1 and len(seen) <= len(self), f"vertex {v} does not reach the root"
            for s in seen:
                depth_ok[s] = True
        for v in range(1, len(self)):
            p = self.parent[v]
            if self.kinodynamic:
                traj = self.edge_trajectory(v, prims)
                seg = sum(distance(a.position, b.position) for a, b in zip(traj, traj[1:]))
                assert trajectory_free(env, traj), f"edge into {v} collides"
            else:
                seg = distance(self.points[p], self.points[v])
                assert segment_free(env, self.points[p], self.points[v]), f"edge into {v} collides"
            assert abs(self.cost[v] - (self.cost[p] + seg)) <= tol * max(1.0, self.cost[v]), \
                f"cost of {v} is stale"


# -- the RRT* procedures --------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Straight path tau(s) = (1 - s) a + s b."""
    a: State
    b: State

    @property
    def cost(self) -> float:
        return distance(self.a, self.b)

    def __call__(self, s: float) -> State:
        return tuple((1.0 - s) * p + s * q for p, q in zip(self.a, self.b))


class Candidate(NamedTuple):
    vertex: int
    c: float
    tau: Segment


CandidateTuple = List[Candidate]


def extend_to(x1: Sequence[float], x2: Sequence[float]) -> Segment:
    if len(x1) != len(x2):
        raise ValueError("dimension mismatch")
    return Segment(tuple(x1), tuple(x2))


def get_tuple(x: Sequence[float], near: Sequence[int], tree: Tree) -> CandidateTuple:
    entries = []
    for v in near:
        tau = extend_to(tree.points[v], x)
        entries.append(Candidate(v, tree.cost[v] + tau.cost, tau))
    entries.sort(key=lambda e: (e.c, e.vertex))
    return entries


def select_best_parent(L: CandidateTuple, env: Environment,
                       collision_free: Callable = None) -> Optional[int]:
    check = collision_free or (lambda tau: segment_free(env, tau.a, tau.b))
    for cand in L:
        if check(cand.tau):
            return cand.vertex
    return None


def rewire(x_new: int, L: CandidateTuple, tree: Tree, env: Environment,
           blocked: frozenset = frozenset()) -> bool:
    """Reparent every neighbour that gets strictly cheaper through ``x_new``.

    ``blocked`` lists vertices whose segment to ``x_new`` is already known to
    collide. Returns whether anything changed.
    """
    changed = False
    for v, _, tau in L:
        d = tau.cost
        if tree.cost[x_new] + d < tree.cost[v]:
            if v in blocked or not segment_free(env, tau.a, tau.b):
                continue
            tree.reparent(v, x_new, d)
            changed = True
    return changed


def best_path(tree: Tree, env: Environment) -> Optional[List[int]]:
    best, best_v = math.inf, None
    for v, p in enumerate(tree.points):
        if env.in_goal(p) and tree.cost[v] < best:
            best, best_v = tree.cost[v], v
    return None if best_v is None else tree.path_to(best_v)


def path_cost(tree: Tree, path: Sequence[int]) -> float:
    return sum(tree.edge[v] for v in path[1:])


# -- sampling -------------------------------------------------------------------

def sample_free(env: Environment, stream: UniformStream, goal_bias: float) -> State:
    if goal_bias > 0.0 and stream.next() < goal_bias:
        return env.goal_center
    lo, hi = env.bounds.lo, env.bounds.hi
    for _ in range(MAX_REJECTIONS):
        x = tuple(l + (h - l) * stream.next() for l, h in zip(lo, hi))
        if point_free(env, x):
            return x
    raise DegenerateEnvironment(f"no free sample in {MAX_REJECTIONS} rejection attempts")


# -- main loop ----------------------------------------------------------------

class _Tracker:
    """Best goal cost, first-path and target bookkeeping shared by both loops."""

    def __init__(self, cfg: PlannerConfig, t0: float):
        self.cfg = cfg
        self.t0 = t0
        self.best = math.inf
        self.m = RunMetrics()

    def update(self, it: int, best: float) -> bool:
        """Record a new best cost; returns True when the run should stop."""
        if not best < self.best:
            return False
        now = time.perf_counter() - self.t0
        self.best = best
        self.m.cost_history.append((it, best))
        if self.m.iters_first is None:
            self.m.iters_first, self.m.time_first = it, now
        tgt = self.cfg.target_cost
        if tgt is not None and self.m.iters_opt is None and best <= tgt:
            self.m.iters_opt, self.m.time_opt = it, now
            return self.cfg.stop_at_target
        return False


def cells_per_axis(env: Environment, expected_nodes: int) -> int:
    per = int(math.ceil(max(expected_nodes, 1) ** (1.0 / env.dim)))
    return int(min(max(per, 4), 512 if env.dim == 2 else 64))


def _plan_python(env: Environment, cfg: PlannerConfig, gamma: float, index_factory=None):
    d = env.dim
    stream = UniformStream(cfg.seed)
    kino = cfg.steering == "differential_drive"
    prims = cfg.drive.primitives if kino else None
    tree = Tree(env.start, cfg.start_heading if kino else None)
    if index_factory is None:
        cap = cfg.node_cap or cfg.max_iters + 1
        index = GridIndex(env.bounds, cells_per_axis(env, cap))
    else:
        index = index_factory(env)
    index.insert(tree.points[0], 0)
    goal_ids = [0] if env.in_goal(tree.points[0]) else []

    t0 = time.perf_counter()
    tr = _Tracker(cfg, t0)
    if goal_ids:
        tr.update(0, 0.0)
    it = 0
    stop = tr.m.iters_opt is not None and cfg.stop_at_target
    while not stop and it < cfg.max_iters and (cfg.node_cap is None or len(tree) < cfg.node_cap):
        it += 1
        if cfg.time_stride and it % cfg.time_stride == 0:
            tr.m.time_marks.append((it, time.perf_counter() - t0))
        x = sample_free(env, stream, cfg.goal_bias)
        if cfg.variant == "p_rrt_star":
            x = rgd(x, env, env.goal_center, cfg.rgd)
        if cfg.max_edge is not None:
            nn = index.nearest(x)
            dn = distance(tree.points[nn], x)
            if dn > cfg.max_edge:
                p = tree.points[nn]
                s = cfg.max_edge / dn
                x = tuple(a + s * (b - a) for a, b in zip(p, x))
        n = len(tree)
        r = near_radius(n, gamma, d)
        near = index.within(x, r)
        if not near:
            near = [index.nearest(x)]

        if kino:
            v_new = _extend_kinodynamic(env, tree, prims, near, x)
            if v_new is None:
                continue
            index.insert(tree.points[v_new], v_new)
            if env.in_goal(tree.points[v_new]):
                goal_ids.append(v_new)
                stop = tr.update(it, min(tr.best, tree.cost[v_new]))
            continue

        L = get_tuple(x, near, tree)
        if any(c.tau.cost == 0.0 for c in L):
            # sample coincides with an existing vertex
            continue
        blocked = set()
        parent = None
        for cand in L:
            if segment_free(env, cand.tau.a, cand.tau.b):
                parent = cand
                break
            blocked.add(cand.vertex)
        if parent is None:
            continue
        v_new = tree.add(x, parent.vertex, parent.tau.cost)
        index.insert(x, v_new)
        in_goal = env.in_goal(x)
        if in_goal:
            goal_ids.append(v_new)
        changed = rewire(v_new, L, tree, env, frozenset(blocked))
        if goal_ids and (changed or in_goal):
            stop = tr.update(it, min(tree.cost[g] for g in goal_ids))

    return tree, tr, it, t0


def _extend_kinodynamic(env, tree: Tree, prims: Primitives, near, x) -> Optional[int]:
    """Steer from each near vertex toward ``x``; keep the parent whose best
    collision-free primitive ends closest to ``x``.

    Vertices are visited by distance to ``x`` and the scan stops once no
    primitive could beat the incumbent, which gives the same answer as trying
    every near vertex.
    """
    cands = sorted((distance(tree.points[v], x), v) for v in near)
    best_d, best_v, best_p = math.inf, -1, -1
    for dv, v in cands:
        if dv - prims.reach - 1e-9 > best_d:
            break
        res = _steer_index(env, prims, tree.state(v), x)
        if res is None:
            continue
        p, de = res
        if de < best_d or (de == best_d and v < best_v):
            best_d, best_v, best_p = de, v, p
    if best_v < 0:
        return None
    traj = prims.pose(best_p, tree.state(best_v))
    end = traj[-1]
    return tree.add(end.position, best_v, float(prims.arc[best_p]), end.theta, best_p)


def _steer_index(env, prims: Primitives, s: DriveState, toward) -> Optional[Tuple[int, float]]:
    ends = [(distance(prims.endpoint(p, s), toward), p) for p in range(len(prims.controls))]
    ends.sort()
    for de, p in ends:
        if trajectory_free(env, prims.pose(p, s)):
            return p, de
    return None


def _finish(env, cfg, tree, tr: _Tracker, it, t0) -> Tuple[Tree, RunMetrics]:
    m = tr.m
    m.time_total = time.perf_counter() - t0
    m.iterations = it
    m.node_count = len(tree)
    m.bytes_per_node = node_bytes(env.dim)
    m.final_cost = None if tr.best == math.inf else tr.best
    if cfg.target_cost is None:
        m.failed = m.final_cost is None
    else:
        m.failed = m.iters_opt is None
    return tree, m


def plan(env: Environment, cfg: PlannerConfig, index_factory=None) -> Tuple[Tree, RunMetrics]:
    """Run the configured planner.

    ``index_factory(env)`` swaps the spatial index (forces the Python loop).
    """
    if cfg.variant == "apf":
        return _plan_apf(env, cfg)
    if cfg.steering == "differential_drive" and env.dim != 2:
        raise PlannerError("differential-drive steering needs a 2-D world")
    gamma = cfg.resolve_gamma(env)
    use_compiled = (index_factory is None and cfg.backend != "python"
                    and _backend.compiled_available())
    if cfg.backend == "compiled" and not _backend.compiled_available():
        raise PlannerError("compiled backend requested but the extension is not built")
    if use_compiled:
        tree, tr, it, t0 = _backend.plan_compiled(env, cfg, gamma)
    else:
        tree, tr, it, t0 = _plan_python(env, cfg, gamma, index_factory)
    return _finish(env, cfg, tree, tr, it, t0)


def _plan_apf(env: Environment, cfg: PlannerConfig) -> Tuple[Tree, RunMetrics]:
    t0 = time.perf_counter()
    path, outcome = gradient_descent(env, cfg.apf)
    tree = Tree(path[0])
    for p in path[1:]:
        tree.add(p, len(tree) - 1, distance(tree.points[-1], p))
    tr = _Tracker(cfg, t0)
    if outcome is Outcome.REACHED_GOAL:
        tr.update(len(path) - 1, tree.cost[-1])
    tree, m = _finish(env, cfg, tree, tr, len(path) - 1, t0)
    m.outcome = outcome.value
    return tree, m
