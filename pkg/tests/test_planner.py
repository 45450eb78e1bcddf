import itertools
import math
from dataclasses import replace

import pytest

from conftest import random_box_world
from prrtstar import _backend
from prrtstar.geometry import Aabb, Environment, distance
from prrtstar.planner import (DegenerateEnvironment, PlannerConfig, PlannerError, Tree, best_path, extend_to,
                              get_tuple, path_cost, plan, rewire, select_best_parent)
from prrtstar.spatial_index import LinearIndex

needs_compiled = pytest.mark.skipif(not _backend.compiled_available(), reason="compiled kernel not built")


def test_extend_to_examples():
    tau = extend_to((1.0, 2.0), (1.0, 2.0))
    assert tau.cost == 0.0
    assert extend_to((0.0, 0.0), (2.0, 0.0))(0.5) == (1.0, 0.0)
    assert extend_to((0.0, 0.0), (3.0, 4.0)).cost == 5.0


def _star_tree(points_costs):
    """Root at the origin plus vertices hung directly off it with a forced cost."""
    t = Tree((0.0, 0.0))
    for p, c in points_costs:
        v = t.add(p, 0, 0.0)
        t.edge[v] = c
        t.cost[v] = c
    return t


def test_get_tuple_examples(rng):
    t = _star_tree([((2.0, 0.0), 3.0)])
    L = get_tuple((4.0, 0.0), [1], t)
    assert [(c.vertex, c.c) for c in L] == [(1, 5.0)]
    assert L[0].tau.a == (2.0, 0.0) and L[0].tau.b == (4.0, 0.0)

    t = _star_tree([((1.0, 0.0), 2.0), ((0.0, 1.0), 2.0)])
    assert [c.vertex for c in get_tuple((1.0, 1.0), [2, 1], t)] == [1, 2]

    pts = [(tuple(rng.uniform(0, 10, 2)), float(rng.integers(0, 5))) for _ in range(20)]
    t = _star_tree(pts)
    x = (5.0, 5.0)
    near = list(range(1, 21))
    oracle = sorted(near, key=lambda v: (t.cost[v] + distance(t.points[v], x), v))
    assert [c.vertex for c in get_tuple(x, near[::-1], t)] == oracle


def test_select_best_parent_examples():
    t = _star_tree([((1.0, 0.0), 0.0), ((0.0, 1.0), 1.0)])
    L = get_tuple((1.0, 1.0), [1, 2], t)
    calls = []

    def free(tau):
        calls.append(tau)
        return True
    assert select_best_parent(L, None, free) == 1
    assert len(calls) == 1
    assert select_best_parent(L, None, lambda tau: False) is None
    assert select_best_parent(L, None, lambda tau: tau.a != (1.0, 0.0)) == 2


def _oracle_costs(tree, x_new, neighbours):
    """Cheapest cost of every vertex over all subsets of neighbour re-parentings."""
    best = list(tree.cost)
    for k in range(len(neighbours) + 1):
        for subset in itertools.combinations(neighbours, k):
            parent = list(tree.parent)
            edge = list(tree.edge)
            for v in subset:
                parent[v] = x_new
                edge[v] = distance(tree.points[x_new], tree.points[v])
            cost = [None] * len(parent)
            cycle = False
            for v in range(len(parent)):
                seen, u = set(), v
                chain = []
                while u != -1 and cost[u] is None:
                    if u in seen:
                        cycle = True
                        break
                    seen.add(u)
                    chain.append(u)
                    u = parent[u]
                if cycle:
                    break
                base = 0.0 if u == -1 else cost[u]
                for w in reversed(chain):
                    base = base + (edge[w] if parent[w] != -1 else 0.0)
                    cost[w] = base
            if not cycle:
                best = [min(a, b) for a, b in zip(best, cost)]
    return best


def test_rewire_matches_exhaustive_oracle():
    env = Environment(Aabb((0, 0), (10, 10)), (), (0.0, 0.0), (9, 9), 0.5)
    t = Tree((0.0, 0.0))
    a = t.add((0.0, 4.0), 0, 4.0)
    b = t.add((4.0, 4.0), a, 4.0)  # detour: cost 8 instead of sqrt(32)
    c = t.add((6.0, 4.0), b, 2.0)
    x = t.add((3.0, 2.0), 0, distance((0, 0), (3, 2)))
    before = list(t.cost)
    # c is not a neighbour, so it only moves through propagation from b
    L = get_tuple(t.points[x], [a, b], t)
    expected = _oracle_costs(t, x, [a, b])
    assert rewire(x, L, t, env)
    assert t.cost == pytest.approx(expected, abs=1e-12)
    assert t.parent[b] == x
    # the drop at b is exactly the geometric difference
    assert before[b] - t.cost[b] == pytest.approx(8.0 - (math.sqrt(13) + math.sqrt(5)), abs=1e-12)
    assert t.parent[c] == b
    assert t.cost[c] == pytest.approx(t.cost[b] + 2.0, abs=1e-12)
    assert all(n <= o for n, o in zip(t.cost, before))
    t.check_invariants(env)


def test_rewire_noop_is_bit_identical():
    env = Environment(Aabb((0, 0), (10, 10)), (), (0.0, 0.0), (9, 9), 0.5)
    t = Tree((0.0, 0.0))
    a = t.add((1.0, 0.0), 0, 1.0)
    x = t.add((5.0, 5.0), 0, distance((0, 0), (5, 5)))
    snapshot = (list(t.parent), list(t.cost), list(t.edge))
    assert not rewire(x, get_tuple(t.points[x], [0, a], t), t, env)
    assert (t.parent, t.cost, t.edge) == snapshot


def test_best_path_examples():
    env = Environment(Aabb((0, 0), (10, 10)), (), (1.0, 1.0), (9, 9), 0.5)
    t = Tree(env.start)
    t.add((5.0, 5.0), 0, distance((1, 1), (5, 5)))
    assert best_path(t, env) is None
    inside = Environment(Aabb((0, 0), (10, 10)), (), (5.0, 5.0), (5.2, 5.0), 0.5)
    t = Tree(inside.start)
    assert best_path(t, inside) == [0]
    assert path_cost(t, [0]) == 0.0


@pytest.mark.parametrize("backend", ["python", pytest.param("compiled", marks=needs_compiled)])
def test_empty_world_path_is_nearly_straight(backend):
    env = Environment(Aabb((0, 0), (10, 10)), (), (1.0, 1.0), (9.0, 9.0), 0.5)
    tree, m = plan(env, PlannerConfig(max_iters=2000, seed=7, backend=backend))
    path = best_path(tree, env)
    straight = distance(env.start, env.goal_center)
    cost = path_cost(tree, path)
    assert straight - env.goal_radius <= cost <= 1.03 * straight
    assert cost == pytest.approx(m.final_cost)


def test_zero_iterations():
    env = Environment(Aabb((0, 0), (10, 10)), (), (1.0, 1.0), (9.0, 9.0), 0.5)
    tree, m = plan(env, PlannerConfig(max_iters=0))
    assert len(tree) == 1 and m.failed and m.final_cost is None and best_path(tree, env) is None


def test_degenerate_world():
    # free space is a sliver of width 1e-9 along the left boundary
    env = Environment(Aabb((0, 0), (10, 10)), (Aabb((1e-9, 0), (10, 10)),), (0.0, 5.0), (9.0, 9.0), 0.5)
    with pytest.raises(DegenerateEnvironment):
        plan(env, PlannerConfig(max_iters=10, backend="python"))
    if _backend.compiled_available():
        with pytest.raises(DegenerateEnvironment):
            plan(env, PlannerConfig(max_iters=10, backend="compiled"))
    with pytest.raises(PlannerError):
        PlannerConfig(variant="bogus")
    with pytest.raises(PlannerError):
        PlannerConfig(goal_bias=1.0)


@pytest.mark.property
def test_tree_invariants_and_monotone_cost(rng):
    for run in range(100):
        d = 3 if run % 5 == 4 else 2
        env = random_box_world(rng, d=d, n_boxes=5)
        cfg = PlannerConfig(variant=("rrt_star", "p_rrt_star")[run % 2], max_iters=300, seed=run,
                            goal_bias=0.05 * (run % 3), backend="python" if run % 10 == 0 else "auto")
        tree, m = plan(env, cfg)
        tree.check_invariants(env)
        costs = [c for _, c in m.cost_history]
        assert all(a > b for a, b in zip(costs, costs[1:]))
        its = [i for i, _ in m.cost_history]
        assert its == sorted(its)
        if m.final_cost is not None:
            assert m.final_cost == pytest.approx(path_cost(tree, best_path(tree, env)), abs=1e-9)


def _tree_tuple(tree):
    return tree.points, tree.parent, tree.cost, tree.edge


@needs_compiled
@pytest.mark.parametrize("variant", ["rrt_star", "p_rrt_star"])
def test_backends_build_identical_trees(variant, rng):
    for trial in range(4):
        env = random_box_world(rng, d=2 + trial % 2, n_boxes=6)
        cfg = PlannerConfig(variant=variant, max_iters=600, seed=trial, goal_bias=0.02 * trial)
        tp, mp = plan(env, replace(cfg, backend="python"))
        tc, mc = plan(env, replace(cfg, backend="compiled"))
        assert _tree_tuple(tp) == _tree_tuple(tc)
        assert mp.deterministic_view() == mc.deterministic_view()


@needs_compiled
def test_backends_agree_on_kinodynamic_trees():
    env = Environment(Aabb((0, 0), (20, 20)), (Aabb((8, 0), (9, 14)),), (2, 2), (17, 3), 0.6)
    cfg = dict(variant="p_rrt_star", steering="differential_drive", max_iters=300, seed=5)
    tp, mp = plan(env, PlannerConfig(backend="python", **cfg))
    tc, mc = plan(env, PlannerConfig(backend="compiled", **cfg))
    assert _tree_tuple(tp) == _tree_tuple(tc)
    assert tp.headings == tc.headings and tp.primitive == tc.primitive
    assert mp.deterministic_view() == mc.deterministic_view()


def test_grid_index_matches_linear_index_in_the_planner(rng):
    env = random_box_world(rng, n_boxes=6)
    cfg = PlannerConfig(variant="p_rrt_star", max_iters=800, seed=11)
    t1, m1 = plan(env, cfg, index_factory=lambda e: LinearIndex(e.dim))
    t2, m2 = plan(env, replace(cfg, backend="python"))
    assert _tree_tuple(t1) == _tree_tuple(t2)
    assert m1.deterministic_view() == m2.deterministic_view()


@pytest.mark.property
def test_same_seed_same_run(rng):
    env = random_box_world(rng, n_boxes=6)
    for backend in ("python", "auto"):
        cfg = PlannerConfig(variant="p_rrt_star", max_iters=1000, seed=42, backend=backend)
        a = plan(env, cfg)
        b = plan(env, cfg)
        assert _tree_tuple(a[0]) == _tree_tuple(b[0])
        assert a[1].deterministic_view() == b[1].deterministic_view()
    other = plan(env, PlannerConfig(variant="p_rrt_star", max_iters=1000, seed=43))
    assert _tree_tuple(other[0]) != _tree_tuple(a[0])


def test_target_stops_the_run():
    env = Environment(Aabb((0, 0), (10, 10)), (), (1.0, 1.0), (9.0, 9.0), 0.5)
    cfg = PlannerConfig(max_iters=5000, seed=1, target_cost=math.inf, stop_at_target=True)
    tree, m = plan(env, cfg)
    assert m.iterations == m.iters_first == m.iters_opt
    assert not m.failed


def test_apf_variant():
    env = Environment(Aabb((0, 0), (20, 20)), (), (2.0, 10.0), (18.0, 10.0), 0.5)
    tree, m = plan(env, PlannerConfig(variant="apf"))
    assert m.outcome == "reached-goal" and not m.failed
    assert env.in_goal(tree.points[-1])
