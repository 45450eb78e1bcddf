"""Deterministic SVG snapshots of a planning tree.

Output depends only on the inputs: coordinates use fixed precision, elements
are written in vertex order and nothing time- or platform-dependent is
embedded, so identical runs give identical bytes.
"""
from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

from .geometry import Environment
from .kinodynamic import Primitives

SCALE = 10.0  # pixels per world unit
MARGIN = 10.0


def _f(x: float) -> str:
    s = format(x, ".3f").rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    def __init__(self, env: Environment, axes: Tuple[int, int]):
        self.ax, self.ay = axes
        self.x0 = env.bounds.lo[self.ax]
        self.y1 = env.bounds.hi[self.ay]
        self.w = (env.bounds.hi[self.ax] - self.x0) * SCALE + 2 * MARGIN
        self.h = (self.y1 - env.bounds.lo[self.ay]) * SCALE + 2 * MARGIN

    def xy(self, p: Sequence[float]) -> Tuple[str, str]:
        # flip y so the world's +y points up
        return (_f(MARGIN + (p[self.ax] - self.x0) * SCALE),
                _f(MARGIN + (self.y1 - p[self.ay]) * SCALE))


def render_svg(tree, env: Environment, path: Optional[Sequence[int]] = None, out=None,
               axes: Tuple[int, int] = (0, 1), prims: Optional[Primitives] = None) -> str:
    """Render obstacles, one element per tree edge, the path and endpoints.

    ``tree`` may be None for an empty picture. 3D worlds are drawn as the
    axis-aligned projection onto ``axes``. Kinodynamic edges are drawn as
    polylines along their trajectories when ``prims`` is given.
    """
    if len(set(axes)) != 2 or not all(0 <= a < env.dim for a in axes):
        raise ValueError(f"bad projection axes {axes} for a {env.dim}D world")
    fr = _Frame(env, axes)
    out_lines: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(fr.w)}" height="{_f(fr.h)}" '
        f'viewBox="0 0 {_f(fr.w)} {_f(fr.h)}">',
        '<style>.edge{stroke:#c02060;stroke-width:0.6;fill:none}'
        '.obstacle{fill:#404040}.path{stroke:#1060d0;stroke-width:2;fill:none}</style>',
    ]
    lo = fr.xy(env.bounds.lo)
    hi = fr.xy(tuple(env.bounds.hi))
    out_lines.append(f'<rect class="world" x="{lo[0]}" y="{hi[1]}" width="{_f(float(hi[0]) - float(lo[0]))}" '
                     f'height="{_f(float(lo[1]) - float(hi[1]))}" fill="white" stroke="black"/>')
    for b in env.obstacles:
        a, c = fr.xy(b.lo), fr.xy(b.hi)
        out_lines.append(f'<rect class="obstacle" x="{a[0]}" y="{c[1]}" width="{_f(float(c[0]) - float(a[0]))}" '
                         f'height="{_f(float(a[1]) - float(c[1]))}"/>')
    kino = tree is not None and getattr(tree, "kinodynamic", False) and prims is not None
    if tree is not None:
        for v in range(1, len(tree)):
            if kino:
                pts = " ".join(",".join(fr.xy(s.position)) for s in tree.edge_trajectory(v, prims))
                out_lines.append(f'<polyline class="edge" points="{pts}"/>')
            else:
                (x1, y1), (x2, y2) = fr.xy(tree.points[tree.parent[v]]), fr.xy(tree.points[v])
                out_lines.append(f'<line class="edge" x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>')
    if tree is not None and path:
        if kino:
            pts = [fr.xy(tree.points[path[0]])]
            for v in path[1:]:
                pts.extend(fr.xy(s.position) for s in tree.edge_trajectory(v, prims)[1:])
        else:
            pts = [fr.xy(tree.points[v]) for v in path]
        out_lines.append('<polyline class="path" points="' + " ".join(",".join(p) for p in pts) + '"/>')
    sx, sy = fr.xy(env.start)
    gx, gy = fr.xy(env.goal_center)
    out_lines.append(f'<circle class="goal" cx="{gx}" cy="{gy}" r="{_f(env.goal_radius * SCALE)}" '
                     'fill="none" stroke="#10a040" stroke-width="2"/>')
    out_lines.append(f'<circle class="start" cx="{sx}" cy="{sy}" r="4" fill="#10a040"/>')
    out_lines.append("</svg>")
    text = "\n".join(out_lines) + "\n"
    if out is not None:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    return text
