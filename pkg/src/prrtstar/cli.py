"""Command line: ``prrtstar plan | bench | oracle``.

Every flag can also come from the environment as ``PRRTSTAR_<DEST>``, e.g.
``PRRTSTAR_MAX_ITERS=5000`` or ``PRRTSTAR_SERIAL=1``. Command line values win
over the environment, which wins over built-in defaults.

Exit codes: 0 success, 1 no path found, 2 invalid input.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import List, Optional

from . import bench
from .geometry import GeometryError
from .planner import PlannerError, best_path, plan
from .potential import PotentialError
from .render import render_svg
from .scenarios import ScenarioError, load

ENV_PREFIX = "PRRTSTAR_"
EXIT_OK, EXIT_NO_PATH, EXIT_INVALID = 0, 1, 2
PLANNERS = {"rrtstar": "rrt_star", "prrtstar": "p_rrt_star", "apf": "apf"}


def _axes(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected two comma-separated axis indices, e.g. 0,2")
    return tuple(int(p) for p in parts)


def _eps(text: str):
    if text.lower() in ("none", "first"):
        return None
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prrtstar", description="RRT* and potential-guided RRT* planning")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run one planner on one scenario")
    p.add_argument("--scenario", required=True, help="scenario file or builtin name")
    p.add_argument("--planner", choices=sorted(PLANNERS), default="prrtstar")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="RGD step size")
    p.add_argument("--rgd-k", type=int, default=None)
    p.add_argument("--dobs", type=float, default=None, help="RGD obstacle clearance")
    p.add_argument("--goal-bias", type=float, default=None)
    p.add_argument("--raw-force", action="store_true", help="RGD steps by the raw force")
    p.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    p.add_argument("--axes", type=_axes, default=(0, 1), help="projection axes for 3D SVG")
    p.add_argument("--out-path")
    p.add_argument("--out-tree")
    p.add_argument("--out-svg")

    b = sub.add_parser("bench", help="repeated trials summarized as CSV")
    b.add_argument("--scenario", required=True)
    b.add_argument("--planners", default="rrtstar,prrtstar")
    b.add_argument("--repeats", type=int, default=10)
    b.add_argument("--base-seed", type=int, default=0)
    b.add_argument("--node-cap", type=int, default=bench.DEFAULT_NODE_CAP)
    b.add_argument("--eps-conv", type=_eps, default=bench.DEFAULT_EPS_CONV,
                   help="convergence tolerance over the oracle cost; 'none' stops at the first path")
    b.add_argument("--out")
    b.add_argument("--serial", action="store_true", help="run trials one at a time (clean timing)")

    o = sub.add_parser("oracle", help="grid shortest-path cost")
    o.add_argument("--scenario", required=True)
    o.add_argument("--resolution", type=float, default=None)
    return ap


def _apply_env(parser: argparse.ArgumentParser, environ) -> None:
    """Turn PRRTSTAR_* variables into parser defaults."""
    subs = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    for sp in subs[0].choices.values():
        overrides = {}
        for act in sp._actions:
            if not act.option_strings or act.dest == "help":
                continue
            raw = environ.get(ENV_PREFIX + act.dest.upper())
            if raw is None:
                continue
            if isinstance(act, argparse._StoreTrueAction):
                overrides[act.dest] = raw.strip().lower() in ("1", "true", "yes", "on")
                continue
            try:
                val = act.type(raw) if act.type else raw
            except (ValueError, argparse.ArgumentTypeError) as e:
                sp.error(f"{ENV_PREFIX}{act.dest.upper()}: {e}")
            if act.choices is not None and val not in act.choices:
                sp.error(f"{ENV_PREFIX}{act.dest.upper()}: {val!r} not in {sorted(act.choices)}")
            overrides[act.dest] = val
            act.required = False
        sp.set_defaults(**overrides)


def _cmd_plan(a) -> int:
    sc = load(a.scenario)
    over = {"variant": PLANNERS[a.planner], "seed": a.seed, "backend": a.backend}
    for key, val in (("max_iters", a.max_iters), ("gamma", a.gamma), ("goal_bias", a.goal_bias)):
        if val is not None:
            over[key] = val
    cfg = sc.planner_config(**over)
    rgd = cfg.rgd
    if a.lam is not None:
        rgd = replace(rgd, lam=a.lam)
    if a.rgd_k is not None:
        rgd = replace(rgd, k=a.rgd_k)
    if a.dobs is not None:
        rgd = replace(rgd, d_obs_star=a.dobs)
    if a.raw_force:
        rgd = replace(rgd, raw_force=True)
    cfg = replace(cfg, rgd=rgd)
    tree, m = plan(sc.env, cfg)
    if cfg.variant == "apf":
        path = list(range(len(tree))) if m.outcome == "reached-goal" else None
    else:
        path = best_path(tree, sc.env)
    prims = cfg.drive.primitives if tree.kinodynamic else None
    if a.out_path:
        doc = {
            "scenario": sc.name,
            "planner": a.planner,
            "seed": a.seed,
            "cost": None if path is None else tree.cost[path[-1]],
            "path": [] if path is None else [list(tree.points[v]) for v in path],
            "metrics": m.as_dict(),
        }
        if tree.kinodynamic and path is not None:
            doc["headings"] = [tree.headings[v] for v in path]
        with open(a.out_path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if a.out_tree:
        _write_tree(tree, a.out_tree)
    if a.out_svg:
        render_svg(tree, sc.env, path, a.out_svg, axes=a.axes, prims=prims)
    if path is None:
        print(f"{sc.name} {a.planner} seed={a.seed}: no path after {m.iterations} iterations "
              f"({m.outcome or 'budget exhausted'})")
        return EXIT_NO_PATH
    print(f"{sc.name} {a.planner} seed={a.seed}: cost {tree.cost[path[-1]]:.4f}, "
          f"{m.node_count} nodes, first path at iteration {m.iters_first}")
    return EXIT_OK


def _write_tree(tree, out):
    d = tree.dim
    cols = ["id", "parent", "cost"] + [f"x{k}" for k in range(d)]
    if tree.kinodynamic:
        cols.append("theta")
    lines = [",".join(cols)]
    for v in range(len(tree)):
        row = [str(v), str(tree.parent[v]), repr(tree.cost[v])] + [repr(c) for c in tree.points[v]]
        if tree.kinodynamic:
            row.append(repr(tree.headings[v]))
        lines.append(",".join(row))
    with open(out, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _cmd_bench(a) -> int:
    sc = load(a.scenario)
    names = [s.strip() for s in a.planners.split(",") if s.strip()]
    bad = [n for n in names if n not in PLANNERS or n == "apf"]
    if bad or not names:
        raise ValueError(f"--planners takes rrtstar and/or prrtstar, got {a.planners!r}")
    if a.repeats < 1 or a.node_cap < 1:
        raise ValueError("--repeats and --node-cap must be positive")
    oracle = bench.grid_oracle_cost(sc) if a.eps_conv is not None else None
    rows = []
    for n in names:
        cfg = sc.planner_config(variant=PLANNERS[n])
        row, _ = bench.run_trials(sc, cfg, a.repeats, a.base_seed, node_cap=a.node_cap,
                                  eps_conv=a.eps_conv, oracle=oracle, serial=a.serial)
        rows.append(row)
    text = bench.write_csv(rows, a.out)
    sys.stdout.write(text)
    return EXIT_NO_PATH if all(r.fail_count == r.repeats for r in rows) else EXIT_OK


def _cmd_oracle(a) -> int:
    sc = load(a.scenario)
    cost = bench.grid_oracle_cost(sc, a.resolution)
    print(f"{cost:.6f}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None, environ=None) -> int:
    parser = build_parser()
    _apply_env(parser, os.environ if environ is None else environ)
    a = parser.parse_args(argv)
    try:
        return {"plan": _cmd_plan, "bench": _cmd_bench, "oracle": _cmd_oracle}[a.command](a)
    except (ScenarioError, GeometryError, PotentialError, bench.ResolutionError, ValueError, OSError) as e:
        print(f"prrtstar: error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except PlannerError as e:
        # degenerate worlds and bad configurations are input problems
        print(f"prrtstar: error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
