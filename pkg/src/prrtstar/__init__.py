"""RRT* and P-RRT* (potential-guided RRT*) motion planning."""
from .geometry import Aabb, Environment, distance, free_measure, nearest_obstacle, point_free, segment_free, unit_ball_volume
from .planner import PlannerConfig, RunMetrics, Tree, best_path, plan
from .potential import ApfConfig, RgdConfig, gradient_descent, rgd
from .spatial_index import GridIndex, LinearIndex, NearParams, gamma_star, near_radius
from ._backend import compiled_available

__all__ = [
    "Aabb", "Environment", "distance", "free_measure", "nearest_obstacle", "point_free",
    "segment_free", "unit_ball_volume", "PlannerConfig", "RunMetrics", "Tree", "best_path",
    "plan", "ApfConfig", "RgdConfig", "gradient_descent", "rgd", "GridIndex", "LinearIndex",
    "NearParams", "gamma_star", "near_radius", "compiled_available",
]
