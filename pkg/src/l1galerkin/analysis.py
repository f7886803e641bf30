"""Error measures, Aitken order estimates and the convergence studies."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import IndeterminateOrderError, MeshError, MissingExactSolutionError
from .fem1d import FeFunction, SpatialMesh, evaluate, l2_difference, l2_error, l2_norm
from .fractional_time import TimeGrid
from .problems import make_preset
from .stepper import SolverOptions, Trajectory, solve

log = logging.getLogger(__name__)


# {{{ error measures


def local_error(trajectory: Trajectory, exact=None, n: Optional[int] = None) -> float:
    """L2 error at time level ``n`` (default: the final time)."""
    exact = _exact_of(trajectory, exact)
    n = trajectory.grid.N if n is None else n
    t = trajectory.grid.t(n)
    return l2_error(trajectory.at(n), lambda x: exact(x, t))


def error_history(trajectory: Trajectory, exact=None) -> np.ndarray:
    exact = _exact_of(trajectory, exact)
    grid = trajectory.grid
    return np.array(
        [l2_error(trajectory.at(n), lambda x, t=grid.t(n): exact(x, t)) for n in range(grid.N + 1)]
    )


def global_error(trajectory: Trajectory, exact=None) -> float:
    """Maximum over all time levels ``0..N`` of the L2 error."""
    return float(np.max(error_history(trajectory, exact)))


def _exact_of(trajectory: Trajectory, exact):
    exact = exact if exact is not None else trajectory.spec.exact
    if exact is None:
        raise MissingExactSolutionError(f"problem {trajectory.spec.name!r} has no exact solution")
    return exact


# }}}

# {{{ Aitken estimators


def aitken_ratio(coarse_diff: float, fine_diff: float) -> float:
    """``log2(coarse_diff / fine_diff)``; the order implied by one halving."""
    if not (fine_diff > 0.0 and coarse_diff > 0.0) or not math.isfinite(coarse_diff / fine_diff):
        raise IndeterminateOrderError(
            f"cannot estimate an order from differences {coarse_diff!r} and {fine_diff!r}"
        )
    return math.log2(coarse_diff / fine_diff)


def _final(u) -> FeFunction:
    return u.final if isinstance(u, Trajectory) else u


def aitken_order_x(u_h, u_h2, u_h4) -> float:
    """Spatial order from final-time solutions on three nested meshes."""
    a, b, c = (_final(u) for u in (u_h, u_h2, u_h4))
    if not (b.mesh.n_elements == 2 * a.mesh.n_elements and c.mesh.n_elements == 2 * b.mesh.n_elements):
        raise MeshError(
            f"meshes must be nested by bisection, got M = {a.mesh.M}, {b.mesh.M}, {c.mesh.M}"
        )
    return aitken_ratio(l2_difference(b, a), l2_difference(c, b))


def _check_time_triple(u_N: Trajectory, u_2N: Trajectory, u_4N: Trajectory) -> None:
    N = u_N.grid.N
    if u_2N.grid.N != 2 * N or u_4N.grid.N != 4 * N:
        raise ValueError(
            f"need N, 2N, 4N steps, got {N}, {u_2N.grid.N}, {u_4N.grid.N}"
        )
    if not (u_N.mesh == u_2N.mesh == u_4N.mesh):
        raise MeshError("temporal order estimates need a common mesh")


def _diff_norm(mesh: SpatialMesh, y) -> float:
    return l2_norm(FeFunction(mesh, y))


def aitken_order_t(u_N: Trajectory, u_2N: Trajectory, u_4N: Trajectory) -> float:
    """Temporal order from the three runs' solutions at the final time."""
    _check_time_triple(u_N, u_2N, u_4N)
    m = u_N.mesh
    d1 = _diff_norm(m, u_2N.coeffs[-1] - u_N.coeffs[-1])
    d2 = _diff_norm(m, u_4N.coeffs[-1] - u_2N.coeffs[-1])
    return aitken_ratio(d1, d2)


def _refine_in_time(coeffs: np.ndarray) -> np.ndarray:
    # piecewise-linear-in-time interpolant sampled on the grid with half the step
    fine = np.empty((2 * coeffs.shape[0] - 1,) + coeffs.shape[1:])
    fine[::2] = coeffs
    fine[1::2] = 0.5 * (coeffs[:-1] + coeffs[1:])
    return fine


def max_difference_in_time(coarse: Trajectory, fine: Trajectory, mode: str = "shared") -> float:
    """Largest L2 difference between two runs with ``N`` and ``2N`` steps.

    ``"shared"`` compares at the coarse levels ``t_n``, ``n = 1..N``;
    ``"interpolated"`` compares the time-piecewise-linear interpolants over
    all of ``[0, T]``, whose largest difference sits at a fine level.
    """
    if fine.grid.N != 2 * coarse.grid.N:
        raise ValueError(f"need N and 2N steps, got {coarse.grid.N} and {fine.grid.N}")
    m = coarse.mesh
    if mode == "shared":
        diff = coarse.coeffs[1:] - fine.coeffs[2::2]
    elif mode == "interpolated":
        diff = (_refine_in_time(coarse.coeffs) - fine.coeffs)[1:]
    else:
        raise ValueError(f"unknown mode {mode!r}; expected 'shared' or 'interpolated'")
    return max(_diff_norm(m, d) for d in diff)


T_INF_MODES = ("pairwise", "interpolated", "coarsest")


def aitken_order_t_inf(
    u_N: Trajectory, u_2N: Trajectory, u_4N: Trajectory, mode: str = "pairwise"
) -> float:
    """Global-in-time temporal order from runs with ``N``, ``2N`` and ``4N`` steps.

    ``mode`` selects where the two max-over-time differences are taken:

    ``"pairwise"``
        each pair on the time levels of its own coarser run, so both
        differences are the same functional of the step size;
    ``"interpolated"``
        each pair over all of ``[0, T]`` via linear interpolation in time;
    ``"coarsest"``
        both pairs only at the ``N + 1`` levels of the coarsest run
        (``n <-> 2n <-> 4n``).  The largest errors of the finer runs sit at
        their first steps, which this mode never sees.
    """
    _check_time_triple(u_N, u_2N, u_4N)
    if mode == "pairwise":
        d1 = max_difference_in_time(u_N, u_2N, "shared")
        d2 = max_difference_in_time(u_2N, u_4N, "shared")
    elif mode == "interpolated":
        d1 = max_difference_in_time(u_N, u_2N, "interpolated")
        d2 = max_difference_in_time(u_2N, u_4N, "interpolated")
    elif mode == "coarsest":
        m = u_N.mesh
        mid = u_2N.coeffs[2::2]
        d1 = max(_diff_norm(m, d) for d in u_N.coeffs[1:] - mid)
        d2 = max(_diff_norm(m, d) for d in u_4N.coeffs[4::4] - mid)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {T_INF_MODES}")
    return aitken_ratio(d1, d2)


# }}}

# {{{ derivative blow-up


def fit_loglog_slope(x, y) -> float:
    """Least-squares slope of ``log|y|`` against ``log x`` over the nonzero entries."""
    x = np.asarray(x, dtype=np.float64)
    y = np.abs(np.asarray(y, dtype=np.float64))
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


@dataclass(frozen=True)
class BlowupSeries:
    times: np.ndarray
    quotients: np.ndarray
    slope: float
    x_probe: float


def derivative_blowup_series(trajectory: Trajectory, x_probe: float = 0.5) -> BlowupSeries:
    """Backward difference quotients ``(u^n - u^{n-1}) / dt`` at ``x_probe``, ``n = 1..N``."""
    grid = trajectory.grid
    vals = np.array(
        [float(evaluate(trajectory.mesh, trajectory.coeffs[n], x_probe)) for n in range(grid.N + 1)]
    )
    q = np.diff(vals) / grid.dt
    t = grid.times[1:]
    return BlowupSeries(times=t, quotients=q, slope=fit_loglog_slope(t, q), x_probe=x_probe)


# }}}

# {{{ studies


@dataclass(frozen=True)
class RunRequest:
    preset: str
    alpha: float
    M: int
    N: int
    T: Optional[float] = None
    options: SolverOptions = SolverOptions()


def run_request(req: RunRequest) -> Trajectory:
    spec = make_preset(req.preset, req.alpha, req.T)
    return solve(spec, SpatialMesh(req.M), TimeGrid(spec.T, req.N), req.options)


def run_many(requests: Sequence[RunRequest], jobs: int = 1) -> list[Trajectory]:
    """Solve independent requests, in parallel worker processes if ``jobs > 1``.

    Results come back in request order, so the output does not depend on
    scheduling.
    """
    if jobs <= 1 or len(requests) <= 1:
        return [run_request(r) for r in requests]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_request, requests))


@dataclass
class ErrorSeries:
    alpha: float
    axis: np.ndarray
    errors: np.ndarray
    mode: str  # "global" or "local"
    axis_name: str  # "N" or "M"
    max_scaled_residual: float = math.nan
    max_norm: float = math.nan
    initial_norm: float = math.nan

    def __post_init__(self) -> None:
        self.axis = np.asarray(self.axis)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.axis.shape != self.errors.shape:
            raise ValueError("axis and errors differ in length")
        if np.any(np.diff(self.axis) <= 0):
            raise ValueError(f"axis must be strictly increasing: {self.axis.tolist()}")
        if not np.all(self.errors > 0):
            raise ValueError("errors must be positive")

    def slope(self) -> float:
        return fit_loglog_slope(self.axis, self.errors)

    def pairwise_orders(self) -> np.ndarray:
        return np.log2(self.errors[:-1] / self.errors[1:]) / np.log2(self.axis[1:] / self.axis[:-1])


def scaled_residual(trajectory: Trajectory) -> float:
    """Largest per-step scheme residual in units of ``dt^-alpha``; NaN if unchecked."""
    r = trajectory.residuals
    if not r.size:
        return math.nan
    return float(r.max()) * trajectory.grid.dt ** trajectory.spec.alpha


def _run_stats(trajs: Iterable[Trajectory]) -> tuple[float, float, float]:
    # largest scaled residual, largest norm and smallest initial norm over the runs
    res, top, init = math.nan, 0.0, math.inf
    for tr in trajs:
        r = scaled_residual(tr)
        if not math.isnan(r):
            res = r if math.isnan(res) else max(res, r)
        norms = [l2_norm(tr.at(n)) for n in range(len(tr))]
        top = max(top, max(norms))
        init = min(init, norms[0])
    return res, top, init


def temporal_study(
    preset: str,
    alpha: float,
    M: int,
    Ns: Sequence[int],
    options: SolverOptions = SolverOptions(),
    jobs: int = 1,
) -> ErrorSeries:
    """Global-in-time error against the exact solution for a sweep over ``N``."""
    trajs = run_many([RunRequest(preset, alpha, M, N, options=options) for N in Ns], jobs)
    errs = [global_error(tr) for tr in trajs]
    return ErrorSeries(alpha, np.array(Ns), np.array(errs), "global", "N", *_run_stats(trajs))


def spatial_study(
    preset: str,
    alpha: float,
    N: int,
    Ms: Sequence[int],
    options: SolverOptions = SolverOptions(),
    jobs: int = 1,
) -> ErrorSeries:
    """Error at the final time against the exact solution for a sweep over ``M``."""
    trajs = run_many([RunRequest(preset, alpha, M, N, options=options) for M in Ms], jobs)
    errs = [local_error(tr) for tr in trajs]
    return ErrorSeries(alpha, np.array(Ms), np.array(errs), "local", "M", *_run_stats(trajs))


@dataclass
class OrderRow:
    alpha: float
    order_x: float
    order_t: float
    order_t_inf: float
    order_t_inf_interpolated: float
    order_t_inf_coarsest: float


@dataclass
class ConvergenceReport:
    rows: list[OrderRow]
    config: dict = field(default_factory=dict)
    max_scaled_residual: float = math.nan

    def row(self, alpha: float) -> OrderRow:
        for r in self.rows:
            if abs(r.alpha - alpha) < 1e-12:
                return r
        raise KeyError(alpha)

    def table(self) -> str:
        """Plain-text temporal and spatial order tables, one column per alpha."""
        head = "norm\\alpha".ljust(16) + "".join(f"{r.alpha:>10.4g}" for r in self.rows)

        def line(label, key):
            return label.ljust(16) + "".join(f"{getattr(r, key):>10.3f}" for r in self.rows)

        c = self.config
        return "\n".join(
            [
                f"temporal orders (M = {c.get('M')}, N = {c.get('N')} base)",
                head,
                line("order_t", "order_t"),
                line("order_t_inf", "order_t_inf"),
                line("  interpolated", "order_t_inf_interpolated"),
                line("  coarsest t_n", "order_t_inf_coarsest"),
                "",
                f"spatial orders (N = {c.get('space_N')}, M = {c.get('space_M')} base)",
                head,
                line("order_x", "order_x"),
            ]
        )


def zfk_tables(
    alphas: Sequence[float],
    M: int = 2**9,
    N: int = 2**6,
    space_N: int = 2**11,
    space_M: int = 2**4,
    preset: str = "zfk",
    options: SolverOptions = SolverOptions(),
    jobs: int = 1,
) -> ConvergenceReport:
    """Temporal orders from ``(M; N, 2N, 4N)`` and spatial orders from ``(M, 2M-1, 4M-3; N)``."""
    space_meshes = [SpatialMesh(space_M)]
    for _ in range(2):
        space_meshes.append(space_meshes[-1].refine())

    requests = []
    for a in alphas:
        requests += [RunRequest(preset, a, M, k * N, options=options) for k in (1, 2, 4)]
        requests += [RunRequest(preset, a, m.M, space_N, options=options) for m in space_meshes]
    trajs = run_many(requests, jobs)

    rows = []
    for i, a in enumerate(alphas):
        t1, t2, t4, x1, x2, x4 = trajs[6 * i : 6 * i + 6]
        rows.append(
            OrderRow(
                alpha=a,
                order_x=aitken_order_x(x1, x2, x4),
                order_t=aitken_order_t(t1, t2, t4),
                order_t_inf=aitken_order_t_inf(t1, t2, t4, "pairwise"),
                order_t_inf_interpolated=aitken_order_t_inf(t1, t2, t4, "interpolated"),
                order_t_inf_coarsest=aitken_order_t_inf(t1, t2, t4, "coarsest"),
            )
        )
    res = max((r for r in map(scaled_residual, trajs) if not math.isnan(r)), default=math.nan)
    config = {"M": M, "N": N, "space_N": space_N, "space_M": space_M, "preset": preset}
    return ConvergenceReport(rows, config, res)


# }}}

# {{{ CSV output


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_snapshot(path, u: FeFunction) -> None:
    """Nodal values ``x,u`` including both boundary nodes."""
    write_csv(path, ("x", "u"), zip(u.mesh.nodes, u.nodal_values))


def write_error_series(path, series: Sequence[ErrorSeries]) -> None:
    write_csv(
        path,
        ("alpha", "param", "error"),
        ((s.alpha, p, e) for s in series for p, e in zip(s.axis, s.errors)),
    )


def write_orders(path, report: ConvergenceReport) -> None:
    write_csv(
        path,
        ("alpha", "order_x", "order_t", "order_t_inf"),
        ((r.alpha, r.order_x, r.order_t, r.order_t_inf) for r in report.rows),
    )


# }}}
