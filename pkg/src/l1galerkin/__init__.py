"""L1-Galerkin solver for the 1D semilinear time-fractional subdiffusion equation.

    d^alpha_t u = (D(x, t) u_x)_x + f(x, t, u)   on (0, 1) x (0, T],
    u(0, t) = u(1, t) = 0,   u(x, 0) = phi(x),

with the Caputo derivative discretized by the L1 scheme, piecewise-linear
Galerkin elements in space, and the source extrapolated from the two
previous levels so that each step is a single tridiagonal solve.
"""

from ._backend import BACKEND
from .fem1d import FeFunction, SpatialMesh
from .fractional_time import L1Weights, TimeGrid, build_weights, l1_apply, step_decomposition
from .problems import ProblemSpec, make_engineered, make_preset, make_zfk, make_zfk_short
from .stepper import SolverOptions, Trajectory, solve

__all__ = [
    "BACKEND",
    "FeFunction",
    "L1Weights",
    "ProblemSpec",
    "SolverOptions",
    "SpatialMesh",
    "TimeGrid",
    "Trajectory",
    "build_weights",
    "l1_apply",
    "make_engineered",
    "make_preset",
    "make_zfk",
    "make_zfk_short",
    "solve",
    "step_decomposition",
]
