"""Underapproximate the guaranteed reachable set of an unknown control-affine
system from its dynamics at one point and Lipschitz bounds."""

from .gvs import (
    ConsistentSample,
    DynamicsSnapshot,
    GvsGeometry,
    ball_radius,
    boundary_polyline,
    geometry,
    gvs_member,
    k_of_d,
    lambda_gains,
    sample_consistent,
)
from .integrate import IntegratorError, IntegratorSettings, integrate
from .linalg import DegenerateMatrixError, Svd, mu_constant, pinv, smallest_nonzero_sv, svd
from .reach import ReachCloud, ReachConfig, TrueDynamics, contains, monte_carlo_reach, project
from .hull import hull2d
from .scenarios import ScenarioConfig, ScenarioError, load_scenario, save_scenario
from .surrogate import Kind, SurrogateSystem, greedy_steer, sample_input

__version__ = "0.1.0"
