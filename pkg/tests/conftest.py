import numpy as np
import pytest

from prrtstar.geometry import Aabb, Environment

_verdicts = []


def record(line: str):
    """Keep an acceptance verdict for the end-of-run summary."""
    print(line)
    _verdicts.append(line)


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance verdicts")
        for line in _verdicts:
            terminalreporter.write_line(line)


def random_box_world(rng, d=2, n_boxes=6, size=10.0):
    """Random axis-aligned boxes in [0, size]^d with start and goal kept free."""
    boxes = []
    while len(boxes) < n_boxes:
        lo = rng.uniform(0.0, size * 0.85, d)
        hi = lo + rng.uniform(0.3, size * 0.25, d)
        boxes.append(Aabb(tuple(lo), tuple(np.minimum(hi, size))))
    start = (0.05 * size,) * d
    goal = (0.95 * size,) * d
    boxes = [b for b in boxes if not b.contains(start) and _far(b, goal, 0.06 * size)]
    return Environment(Aabb((0.0,) * d, (size,) * d), tuple(boxes), start, goal, 0.05 * size)


def _far(box, c, r):
    d2 = sum(max(lo - x, 0.0, x - hi) ** 2 for x, lo, hi in zip(c, box.lo, box.hi))
    return d2 > r * r


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def empty2d():
    return Environment(Aabb((0.0, 0.0), (10.0, 10.0)), (), (1.0, 1.0), (9.0, 9.0), 0.5)
