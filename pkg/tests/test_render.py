import re

import pytest

from prrtstar.planner import PlannerConfig, Tree, best_path, plan
from prrtstar.render import render_svg
from prrtstar.scenarios import builtin


def test_empty_tree_draws_world_and_markers():
    sc = builtin("local_minima_2d")
    svg = render_svg(None, sc.env)
    assert svg.count('class="world"') == 1
    assert svg.count('class="obstacle"') == len(sc.env.obstacles)
    assert 'class="goal"' in svg and 'class="start"' in svg
    assert 'class="edge"' not in svg and 'class="path"' not in svg
    # a root-only tree has no edges either
    assert render_svg(Tree(sc.env.start), sc.env) == svg


@pytest.mark.property
def test_same_input_same_bytes(tmp_path):
    sc = builtin("cluttered_2d")
    tree, _ = plan(sc.env, PlannerConfig(variant="p_rrt_star", max_iters=500, seed=4))
    path = best_path(tree, sc.env)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_svg(tree, sc.env, path, a)
    tree2, _ = plan(sc.env, PlannerConfig(variant="p_rrt_star", max_iters=500, seed=4))
    render_svg(tree2, sc.env, best_path(tree2, sc.env), b)
    assert a.read_bytes() == b.read_bytes()


def test_one_edge_element_per_non_root_vertex():
    sc = builtin("cluttered_2d")
    tree, m = plan(sc.env, PlannerConfig(variant="rrt_star", max_iters=2000, seed=0))
    svg = render_svg(tree, sc.env, best_path(tree, sc.env))
    assert len(re.findall(r'<line class="edge"', svg)) == m.node_count - 1


def test_kinodynamic_edges_follow_trajectories():
    sc = builtin("diffdrive_local_minima")
    cfg = sc.planner_config(max_iters=300, seed=2)
    tree, m = plan(sc.env, cfg)
    svg = render_svg(tree, sc.env, None, prims=cfg.drive.primitives)
    polylines = re.findall(r'<polyline class="edge" points="([^"]*)"', svg)
    assert len(polylines) == m.node_count - 1
    assert all(len(p.split()) == cfg.drive.n_steps + 1 for p in polylines)


def test_projection_axes():
    sc = builtin("barriers_3d")
    tree, m = plan(sc.env, PlannerConfig(max_iters=200, seed=1))
    xz = render_svg(tree, sc.env, axes=(0, 2))
    assert xz != render_svg(tree, sc.env, axes=(0, 1))
    with pytest.raises(ValueError):
        render_svg(tree, sc.env, axes=(0, 3))
    with pytest.raises(ValueError):
        render_svg(tree, sc.env, axes=(1, 1))
