"""Time the compiled planning kernel against the pure-Python loop.

    python benchmarks/bench_backends.py --scenario local_minima_2d --iters 5000

Both backends consume the same random stream, so the script also checks that
they build identical trees before reporting the speed-up.
"""
import argparse
import statistics
import time
from dataclasses import replace

from prrtstar import _backend
from prrtstar.planner import plan
from prrtstar.scenarios import load


def timed(env, cfg, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        tree, m = plan(env, cfg)
        times.append(time.perf_counter() - t0)
    return tree, m, statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="local_minima_2d")
    ap.add_argument("--iters", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--variants", default="rrt_star,p_rrt_star")
    a = ap.parse_args(argv)

    if not _backend.compiled_available():
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
    sc = load(a.scenario)
    print(f"{'variant':<12}{'python s':>10}{'compiled s':>12}{'speed-up':>10}  identical")
    for variant in a.variants.split(","):
        base = sc.planner_config(variant=variant, max_iters=a.iters, seed=a.seed)
        out = {}
        for backend in ("python", "compiled"):
            out[backend] = timed(sc.env, replace(base, backend=backend), a.repeats)
        (tp, mp, t_py), (tc, mc, t_c) = out["python"], out["compiled"]
        same = (tp.points, tp.parent, tp.cost) == (tc.points, tc.parent, tc.cost) \
            and mp.deterministic_view() == mc.deterministic_view()
        print(f"{variant:<12}{t_py:>10.3f}{t_c:>12.4f}{t_py / t_c:>9.0f}x  {same}")


if __name__ == "__main__":
    main()
