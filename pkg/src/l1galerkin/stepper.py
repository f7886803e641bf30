"""Fully discrete L1-Galerkin time march with an extrapolated source.

Each step ``n >= 2`` solves the linear tridiagonal system

    (scale S + A^n) y^n = -S (sum_{i<n} c_i y^i) + F^n(2 y^{n-1} - y^{n-2}),

where ``scale`` and ``c_i`` come from :func:`step_decomposition`.  The first
step has no extrapolation available and is solved as the nonlinear system
by fixed-point iteration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FirstStepDivergenceError, IllPosedStepError, MeshError
from .fem1d import (
    FeFunction,
    SpatialMesh,
    Tridiagonal,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    project_initial,
)
from .fractional_time import L1Weights, TimeGrid, build_weights, l1_apply, step_decomposition
from .kernels import PivotError, weighted_row_sum
from .problems import ProblemSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    first_step_tol: float = 1e-12
    max_iter: int = 100
    snapshot_stride: int = 1
    check_residual: bool = False
    extrapolate: bool = True
    """Feed the load with ``2 y^{n-1} - y^{n-2}``; if False, with ``y^{n-1}``."""


@dataclass
class SolverState:
    spec: ProblemSpec
    mesh: SpatialMesh
    grid: TimeGrid
    weights: L1Weights
    S: Tridiagonal
    history: np.ndarray = field(repr=False)
    n: int = 0
    options: SolverOptions = field(default_factory=SolverOptions)
    residuals: list = field(default_factory=list)
    first_step_iterations: int = 0

    @property
    def current(self) -> np.ndarray:
        return self.history[self.n]


def init_state(
    spec: ProblemSpec, mesh: SpatialMesh, grid: TimeGrid, options: Optional[SolverOptions] = None
) -> SolverState:
    options = options or SolverOptions()
    if abs(grid.T - spec.T) > 1e-14 * spec.T:
        log.debug("grid final time %g differs from problem final time %g", grid.T, spec.T)
    history = np.zeros((grid.N + 1, mesh.n_dofs))
    history[0] = project_initial(mesh, spec.phi).coeffs
    return SolverState(
        spec=spec,
        mesh=mesh,
        grid=grid,
        weights=build_weights(spec.alpha, grid),
        S=assemble_mass(mesh),
        history=history,
        options=options,
    )


def extrapolate(y_prev, y_prev2):
    """Linear extrapolation ``2 y_prev - y_prev2``."""
    y_prev = np.asarray(y_prev, dtype=np.float64)
    y_prev2 = np.asarray(y_prev2, dtype=np.float64)
    if y_prev.shape != y_prev2.shape:
        raise MeshError(f"shape mismatch: {y_prev.shape} vs {y_prev2.shape}")
    return 2.0 * y_prev - y_prev2


def _system(state: SolverState, n: int) -> tuple[Tridiagonal, Tridiagonal]:
    A = assemble_stiffness(state.mesh, state.spec.D, state.grid.t(n))
    return state.S.scaled(state.weights.scale) + A, A


def _residual(state: SolverState, n: int, A: Tridiagonal, load: np.ndarray) -> float:
    # independent of step_decomposition: re-apply the operator to the history
    dy = l1_apply(state.history[: n + 1], state.weights)
    r = state.S @ dy + A @ state.history[n] - load
    return float(np.linalg.norm(r))


def _solve(lhs: Tridiagonal, rhs: np.ndarray, n: int) -> np.ndarray:
    try:
        return lhs.solve(rhs)
    except PivotError as exc:
        raise IllPosedStepError(f"step {n}: {exc}", step=n) from exc


def first_step(
    state: SolverState, tol: Optional[float] = None, max_iter: Optional[int] = None
) -> np.ndarray:
    """Solve the nonlinear first step by Picard iteration started at ``y^0``.

    Iterates ``y <- (scale S + A^1)^{-1} (scale S y^0 + F^1(y))`` until the
    max-norm of the increment drops to ``tol``.
    """
    if state.n != 0:
        raise ValueError(f"first_step needs a fresh state, current step is {state.n}")
    tol = state.options.first_step_tol if tol is None else tol
    max_iter = state.options.max_iter if max_iter is None else max_iter

    mesh, spec = state.mesh, state.spec
    t1 = state.grid.t(1)
    lhs, A = _system(state, 1)
    y0 = state.history[0]
    base = state.S @ (state.weights.scale * y0)

    y = y0.copy()
    inc = np.inf
    for it in range(1, max_iter + 1):
        y_new = _solve(lhs, base + assemble_load(mesh, spec.f, t1, y), 1)
        inc = float(np.max(np.abs(y_new - y))) if y.size else 0.0
        y = y_new
        if not np.isfinite(inc):
            break
        if inc <= tol:
            break
    else:
        it = max_iter

    if not (np.isfinite(inc) and inc <= tol):
        raise FirstStepDivergenceError(
            f"first step did not converge in {max_iter} iterations (last increment {inc:.3e})",
            residual=inc,
        )

    state.first_step_iterations = it
    state.history[1] = y
    state.n = 1
    if state.options.check_residual:
        state.residuals.append(_residual(state, 1, A, assemble_load(mesh, spec.f, t1, y)))
    return y


def step(state: SolverState) -> np.ndarray:
    """Advance one step (``n >= 2``) with the extrapolated source."""
    n = state.n + 1
    if n < 2:
        raise ValueError("step() needs the first step to be done; call first_step()")
    if n > state.grid.N:
        raise ValueError(f"time grid exhausted at N = {state.grid.N}")

    H = state.history
    dec = step_decomposition(n, state.weights)
    coeffs = np.empty(n)
    coeffs[0] = dec.init
    coeffs[1:] = dec.history
    past = weighted_row_sum(coeffs, H[:n])

    if state.options.extrapolate:
        y_hat = extrapolate(H[n - 1], H[n - 2])
    else:
        y_hat = H[n - 1]
    t = state.grid.t(n)
    load = assemble_load(state.mesh, state.spec.f, t, y_hat)

    lhs, A = _system(state, n)
    y = _solve(lhs, load - state.S @ past, n)
    if not np.all(np.isfinite(y)):
        raise IllPosedStepError(f"step {n}: solution is no longer finite", step=n)
    H[n] = y
    state.n = n
    if state.options.check_residual:
        state.residuals.append(_residual(state, n, A, load))
    return H[n]


@dataclass
class Trajectory:
    """Interior coefficients ``y^0..y^N`` of a run, one row per time level."""

    spec: ProblemSpec
    mesh: SpatialMesh
    grid: TimeGrid
    coeffs: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    first_step_iterations: int = 0

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def at(self, n: int) -> FeFunction:
        return FeFunction(self.mesh, self.coeffs[n])

    @property
    def final(self) -> FeFunction:
        return self.at(self.grid.N)


def solve(
    spec: ProblemSpec,
    mesh: SpatialMesh,
    grid: TimeGrid,
    options: Optional[SolverOptions] = None,
) -> Trajectory:
    state = init_state(spec, mesh, grid, options)
    first_step(state)
    for _ in range(2, grid.N + 1):
        step(state)
    return Trajectory(
        spec=spec,
        mesh=mesh,
        grid=grid,
        coeffs=state.history,
        residuals=np.asarray(state.residuals),
        first_step_iterations=state.first_step_iterations,
    )
