"""Scenario files and the built-in worlds.

A scenario is an environment plus planner defaults. Files are JSON with a
``format_version`` header; :func:`dumps` writes a canonical form (fixed key
order, floats with 17 significant digits) so ``dumps(loads(text)) == text`` for
any text that ``dumps`` produced.

Schema, version 1::

    {
      "format_version": 1,
      "name": str,
      "dimension": int,
      "bounds": {"min": [d floats], "max": [d floats]},
      "obstacles": [{"min": [...], "max": [...]}, ...],
      "start": [d floats],
      "goal": {"center": [d floats], "radius": float},
      "oracle_resolution": float,
      "defaults": {...}
    }

``defaults`` may hold any of: variant, gamma, max_iters, node_cap, rgd_k,
lambda, d_obs, goal_bias, steering, start_heading, apf {k_a, k_r, d_g_star,
d_obs_star, lambda, max_steps}, drive {v_max, w_max, dt, duration,
control_grid}.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .geometry import Aabb, Environment, GeometryError, distance
from .kinodynamic import DriveModel
from .planner import PlannerConfig
from .potential import ApfConfig, RgdConfig

FORMAT_VERSION = 1
BUILTIN_NAMES = ("local_minima_2d", "cluttered_2d", "maze_a_2d", "maze_b_2d",
                 "barriers_3d", "narrow_3d", "maze_3d", "diffdrive_local_minima")

_DEFAULT_KEYS = ("variant", "gamma", "max_iters", "node_cap", "rgd_k", "lambda", "d_obs",
                 "goal_bias", "steering", "start_heading", "apf", "drive")
_APF_KEYS = ("k_a", "k_r", "d_g_star", "d_obs_star", "lambda", "max_steps")
_DRIVE_KEYS = ("v_max", "w_max", "dt", "duration", "control_grid")


class ScenarioError(ValueError):
    """Malformed or invalid scenario. ``where`` names the offending field."""

    def __init__(self, msg: str, where: str = "", line: int = None, column: int = None):
        self.where = where
        self.line = line
        self.column = column
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{where + ': ' if where else ''}{msg}{loc}")


@dataclass(frozen=True)
class Scenario:
    name: str
    env: Environment
    oracle_resolution: float = 0.1
    defaults: Dict[str, Any] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.env.dim

    def straight_line_bound(self) -> float:
        return max(0.0, distance(self.env.start, self.env.goal_center) - self.env.goal_radius)

    def planner_config(self, **overrides) -> PlannerConfig:
        """PlannerConfig from the scenario defaults, then ``overrides``."""
        d = self.defaults
        kw: Dict[str, Any] = {}
        for key in ("variant", "gamma", "max_iters", "node_cap", "goal_bias", "steering", "start_heading"):
            if key in d:
                kw[key] = d[key]
        rgd_kw = {}
        if "rgd_k" in d:
            rgd_kw["k"] = int(d["rgd_k"])
        if "lambda" in d:
            rgd_kw["lam"] = float(d["lambda"])
        if "d_obs" in d:
            rgd_kw["d_obs_star"] = float(d["d_obs"])
        if rgd_kw:
            kw["rgd"] = RgdConfig(**rgd_kw)
        if "apf" in d:
            a = dict(d["apf"])
            if "lambda" in a:
                a["lam"] = a.pop("lambda")
            kw["apf"] = ApfConfig(**a)
        if "drive" in d:
            kw["drive"] = DriveModel(**d["drive"])
        kw.update(overrides)
        return PlannerConfig(**kw)


# -- canonical writer ---------------------------------------------------------

def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    s = format(float(x), ".17g")
    if not any(ch in s for ch in ".eEn"):
        s += ".0"
    return s


def _vec(v) -> str:
    return "[" + ", ".join(_num(c) for c in v) + "]"


def _value(v, indent: str) -> str:
    if isinstance(v, dict):
        if not v:
            return "{}"
        inner = indent + "  "
        items = [f'{inner}"{k}": {_value(x, inner)}' for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + indent + "}"
    if isinstance(v, (list, tuple)):
        return _vec(v)
    if isinstance(v, str):
        return json.dumps(v)
    if v is None:
        return "null"
    return _num(v)


def _canonical_defaults(d: Dict[str, Any]) -> Dict[str, Any]:
    out = {}
    for k in _DEFAULT_KEYS:
        if k not in d:
            continue
        v = d[k]
        if k == "apf":
            v = {kk: v[kk] for kk in _APF_KEYS if kk in v}
        elif k == "drive":
            v = {kk: v[kk] for kk in _DRIVE_KEYS if kk in v}
        out[k] = v
    return out


def dumps(sc: Scenario) -> str:
    env = sc.env
    lines = [
        "{",
        f'  "format_version": {FORMAT_VERSION},',
        f'  "name": {json.dumps(sc.name)},',
        f'  "dimension": {env.dim},',
        f'  "bounds": {{"min": {_vec(env.bounds.lo)}, "max": {_vec(env.bounds.hi)}}},',
    ]
    if env.obstacles:
        lines.append('  "obstacles": [')
        obs = [f'    {{"min": {_vec(b.lo)}, "max": {_vec(b.hi)}}}' for b in env.obstacles]
        lines.append(",\n".join(obs))
        lines.append("  ],")
    else:
        lines.append('  "obstacles": [],')
    lines += [
        f'  "start": {_vec(env.start)},',
        f'  "goal": {{"center": {_vec(env.goal_center)}, "radius": {_num(env.goal_radius)}}},',
        f'  "oracle_resolution": {_num(sc.oracle_resolution)},',
        f'  "defaults": {_value(_canonical_defaults(sc.defaults), "  ")}',
        "}",
    ]
    return "\n".join(lines) + "\n"


def save(sc: Scenario, path: Union[str, Path]):
    Path(path).write_text(dumps(sc))


# -- reader ---------------------------------------------------------------------

def _need(doc: dict, key: str, where: str = ""):
    if key not in doc:
        raise ScenarioError("missing field", where or key)
    return doc[key]


def _vector(v, d: int, where: str) -> List[float]:
    if not isinstance(v, list) or len(v) != d or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
        raise ScenarioError(f"expected a list of {d} numbers", where)
    if not all(math.isfinite(c) for c in v):
        raise ScenarioError("coordinates must be finite", where)
    return [float(c) for c in v]


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(e.msg, "parse", e.lineno, e.colno) from None
    if not isinstance(doc, dict):
        raise ScenarioError("top level must be an object", "parse")
    version = _need(doc, "format_version")
    if version != FORMAT_VERSION:
        raise ScenarioError(f"unsupported version {version!r}", "format_version")
    name = _need(doc, "name")
    if not isinstance(name, str):
        raise ScenarioError("must be a string", "name")
    d = _need(doc, "dimension")
    if not isinstance(d, int) or d < 2:
        raise ScenarioError("must be an integer >= 2", "dimension")
    b = _need(doc, "bounds")
    try:
        bounds = Aabb(tuple(_vector(_need(b, "min", "bounds.min"), d, "bounds.min")),
                      tuple(_vector(_need(b, "max", "bounds.max"), d, "bounds.max")))
    except GeometryError as e:
        raise ScenarioError(str(e), "bounds") from None
    obstacles = []
    for i, o in enumerate(_need(doc, "obstacles")):
        w = f"obstacles[{i}]"
        try:
            obstacles.append(Aabb(tuple(_vector(_need(o, "min", w), d, w + ".min")),
                                  tuple(_vector(_need(o, "max", w), d, w + ".max"))))
        except GeometryError as e:
            raise ScenarioError(str(e), w) from None
    start = _vector(_need(doc, "start"), d, "start")
    g = _need(doc, "goal")
    center = _vector(_need(g, "center", "goal.center"), d, "goal.center")
    radius = _need(g, "radius", "goal.radius")
    if not isinstance(radius, (int, float)) or isinstance(radius, bool) or not math.isfinite(radius):
        raise ScenarioError("must be a finite number", "goal.radius")
    res = doc.get("oracle_resolution", 0.1)
    if not isinstance(res, (int, float)) or not res > 0:
        raise ScenarioError("must be a positive number", "oracle_resolution")
    defaults = doc.get("defaults", {})
    if not isinstance(defaults, dict):
        raise ScenarioError("must be an object", "defaults")
    unknown = set(defaults) - set(_DEFAULT_KEYS)
    if unknown:
        raise ScenarioError(f"unknown keys {sorted(unknown)}", "defaults")
    try:
        env = Environment(bounds, tuple(obstacles), tuple(start), tuple(center), radius)
    except GeometryError as e:
        msg = str(e)
        where = msg.split(":", 1)[0] if ":" in msg else "environment"
        raise ScenarioError(msg.split(":", 1)[-1].strip(), where) from None
    sc = Scenario(name, env, float(res), _canonical_defaults(defaults))
    try:
        sc.planner_config()
    except (ValueError, TypeError) as e:
        raise ScenarioError(str(e), "defaults") from None
    return sc


def load(source: Union[str, Path]) -> Scenario:
    """Load from a path, a builtin name, or JSON text."""
    if isinstance(source, Path):
        return loads(source.read_text())
    s = str(source)
    if s.lstrip().startswith("{"):
        return loads(s)
    if s.startswith("builtin:"):
        return builtin(s.split(":", 1)[1])
    p = Path(s)
    if not p.exists() and s in BUILTIN_NAMES:
        return builtin(s)
    return loads(p.read_text())


# -- built-in worlds --------------------------------------------------------------

def _box(x0, y0, x1, y1, z0=None, z1=None) -> Aabb:
    if z0 is None:
        return Aabb((x0, y0), (x1, y1))
    return Aabb((x0, y0, z0), (x1, y1, z1))


def _rgd_defaults(**extra):
    d = {"variant": "p_rrt_star", "rgd_k": 90, "lambda": 0.1, "d_obs": 0.1}
    d.update(extra)
    return d


def _local_minima_2d() -> Scenario:
    # A U-shaped pocket opening toward the start. The cheaper way round runs
    # under the lower arm; both of its bends sit on 45-degree legs so the
    # 8-connected grid oracle is nearly exact here.
    obstacles = (
        _box(30.0, 12.0, 32.0, 40.0),   # back wall
        _box(18.0, 12.0, 32.0, 14.0),   # lower arm
        _box(18.0, 38.0, 32.0, 40.0),   # upper arm
    )
    env = Environment(_box(0, 0, 50, 50), obstacles, (5.0, 25.0), (45.0, 25.0), 0.5)
    apf = {"k_a": 1.0, "k_r": 50.0, "d_g_star": 2.0, "d_obs_star": 3.0, "lambda": 0.1, "max_steps": 5000}
    return Scenario("local_minima_2d", env, 0.1, _rgd_defaults(apf=apf))


def _cluttered_2d() -> Scenario:
    # Six thick walls, each pierced by a 0.3 m slit on the start-goal line and
    # a wide gap well off it, with small blocks scattered between them. The
    # straight line through every slit is the optimum; each wide-gap detour
    # costs far more than the convergence tolerance.
    w = 0.3
    pitch = 38.0 / 7
    obs = []
    for j in range(6):
        xc = 1.0 + pitch * (j + 1)
        x0, x1 = xc - 1.5, xc + 1.5
        wide = (24.0, 27.0) if j % 2 == 0 else (13.0, 16.0)
        cuts = sorted([wide, (20.0 - w / 2, 20.0 + w / 2)])
        ys = [0.0] + [c for cut in cuts for c in cut] + [40.0]
        obs.extend(_box(x0, a, x1, b) for a, b in zip(ys[::2], ys[1::2]))
    for j in range(5):
        xc = 1.0 + pitch * (j + 1.5)
        for a, b in ((3.0, 6.0), (9.0, 11.0), (29.0, 31.0), (34.0, 37.0)):
            obs.append(_box(xc - 0.6, a, xc + 0.6, b))
    env = Environment(_box(0, 0, 40, 40), tuple(obs), (1.0, 20.0), (39.0, 20.0), 0.5)
    return Scenario("cluttered_2d", env, 0.1, _rgd_defaults())


def _maze_a_2d() -> Scenario:
    # serpentine: start and goal close together, separated by long walls
    walls = (
        _box(10.0, 0.0, 11.0, 32.0),
        _box(20.0, 8.0, 21.0, 40.0),
        _box(30.0, 0.0, 31.0, 32.0),
    )
    env = Environment(_box(0, 0, 40, 40), walls, (5.0, 5.0), (15.0, 5.0), 0.5)
    return Scenario("maze_a_2d", env, 0.1, _rgd_defaults())


def _maze_b_2d() -> Scenario:
    walls = (
        _box(0.0, 8.0, 30.0, 9.0),
        _box(10.0, 16.0, 40.0, 17.0),
        _box(0.0, 24.0, 30.0, 25.0),
        _box(10.0, 32.0, 40.0, 33.0),
        _box(14.0, 0.0, 15.0, 5.0),
        _box(24.0, 20.0, 25.0, 24.0),
    )
    env = Environment(_box(0, 0, 40, 40), walls, (5.0, 4.0), (5.0, 36.0), 0.5)
    return Scenario("maze_b_2d", env, 0.1, _rgd_defaults())


def _wall_with_window(x0, x1, lo, hi, wy0, wy1, wz0, wz1):
    """Slab x0..x1 spanning the y/z extent lo..hi with a rectangular window."""
    return (
        _box(x0, lo, x1, wy0, lo, hi),
        _box(x0, wy1, x1, hi, lo, hi),
        _box(x0, wy0, x1, wy1, lo, wz0),
        _box(x0, wy0, x1, wy1, wz1, hi),
    )


def _barriers_3d() -> Scenario:
    obs = (_wall_with_window(5.0, 5.5, 0.0, 20.0, 2.0, 6.0, 2.0, 6.0)
           + _wall_with_window(10.0, 10.5, 0.0, 20.0, 14.0, 18.0, 14.0, 18.0)
           + _wall_with_window(15.0, 15.5, 0.0, 20.0, 2.0, 6.0, 14.0, 18.0))
    env = Environment(Aabb((0, 0, 0), (20, 20, 20)), obs, (1.0, 10.0, 10.0), (19.0, 10.0, 10.0), 0.75)
    return Scenario("barriers_3d", env, 0.25, _rgd_defaults())


def _narrow_3d() -> Scenario:
    obs = (_wall_with_window(6.0, 7.0, 0.0, 20.0, 9.0, 10.5, 9.0, 10.5)
           + _wall_with_window(13.0, 14.0, 0.0, 20.0, 4.0, 5.5, 14.0, 15.5))
    env = Environment(Aabb((0, 0, 0), (20, 20, 20)), obs, (2.0, 16.0, 4.0), (18.0, 10.0, 10.0), 0.75)
    return Scenario("narrow_3d", env, 0.25, _rgd_defaults())


def _maze_3d() -> Scenario:
    # three floors joined by holes at opposite corners, with a partition wall
    # on each floor so the route has to wind around inside every level
    def b(x0, y0, z0, x1, y1, z1):
        return Aabb((x0, y0, z0), (x1, y1, z1))
    obs = (
        b(0.0, 0.0, 6.0, 16.0, 20.0, 7.0), b(16.0, 0.0, 6.0, 20.0, 16.0, 7.0),      # floor 1, hole at (+x, +y)
        b(4.0, 0.0, 13.0, 20.0, 20.0, 14.0), b(0.0, 4.0, 13.0, 4.0, 20.0, 14.0),    # floor 2, hole at (-x, -y)
        b(0.0, 9.0, 0.0, 14.0, 10.0, 6.0),                                          # ground partition
        b(6.0, 7.0, 7.0, 20.0, 8.0, 13.0),                                          # middle partition
        b(8.0, 0.0, 14.0, 9.0, 14.0, 20.0),                                         # top partition
    )
    env = Environment(Aabb((0, 0, 0), (20, 20, 20)), obs, (2.0, 2.0, 2.0), (18.0, 3.0, 17.0), 0.75)
    return Scenario("maze_3d", env, 0.25, _rgd_defaults())


def _diffdrive_local_minima() -> Scenario:
    # Local-minimum pocket sized so the optimal route (under the lower arm,
    # 45-degree legs) costs about 61 m, the scale of the robot experiment.
    obstacles = (
        _box(39.0, 16.0, 41.0, 48.0),   # back wall
        _box(19.0, 16.0, 41.0, 18.0),   # lower arm
        _box(19.0, 46.0, 41.0, 48.0),   # upper arm
    )
    env = Environment(_box(0, 0, 60, 60), obstacles, (5.0, 30.0), (55.0, 30.0), 0.5)
    defaults = _rgd_defaults(steering="differential_drive", start_heading=0.0,
                             drive={"v_max": 1.0, "w_max": 1.5, "dt": 0.02, "duration": 0.5, "control_grid": 7})
    return Scenario("diffdrive_local_minima", env, 0.1, defaults)


_BUILDERS = {
    "local_minima_2d": _local_minima_2d,
    "cluttered_2d": _cluttered_2d,
    "maze_a_2d": _maze_a_2d,
    "maze_b_2d": _maze_b_2d,
    "barriers_3d": _barriers_3d,
    "narrow_3d": _narrow_3d,
    "maze_3d": _maze_3d,
    "diffdrive_local_minima": _diffdrive_local_minima,
}


def builtin(name: str) -> Scenario:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ScenarioError(f"unknown builtin {name!r}; choose from {', '.join(BUILTIN_NAMES)}", "name") from None
