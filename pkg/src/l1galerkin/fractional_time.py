"""L1 discretization of the Caputo derivative on a uniform time grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGridError, InsufficientHistoryError, InvalidOrderError, StepIndexError
from .kernels import weighted_row_sum


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_n = n * dt`` on ``[0, T]`` with ``N`` steps."""

    T: float
    N: int

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise EmptyGridError(f"time grid needs N >= 1 steps, got {self.N}")
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt

    def t(self, n: int) -> float:
        return n * self.dt


def check_order(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidOrderError(f"fractional order must lie in (0, 1), got {alpha}")
    return alpha


@dataclass(frozen=True)
class L1Weights:
    r"""Coefficients of the L1 operator for a fixed order and grid.

    ``b[j - 1]`` holds :math:`b_j(1 - \alpha) = j^{1-\alpha} - (j-1)^{1-\alpha}`
    for ``j = 1..N``, and ``scale`` is :math:`\Delta t^{-\alpha} / \Gamma(2 - \alpha)`.
    The arrays are read-only.
    """

    alpha: float
    grid: TimeGrid
    b: np.ndarray = field(repr=False)
    scale: float

    @property
    def N(self) -> int:
        return self.grid.N

    def coefficient(self, j: int) -> float:
        """Return ``b_j`` (1-based, as in the usual notation)."""
        if not 1 <= j <= self.N:
            raise StepIndexError(f"weight index must be in 1..{self.N}, got {j}")
        return float(self.b[j - 1])


def build_weights(alpha: float, grid: TimeGrid) -> L1Weights:
    """Tabulate the L1 weights ``b_j(1 - alpha)``, ``j = 1..N``, once."""
    alpha = check_order(alpha)
    if grid.N < 1:
        raise EmptyGridError("empty time grid")

    beta = 1.0 - alpha
    j = np.arange(1, grid.N + 1, dtype=np.float64)
    b = j**beta - (j - 1.0) ** beta
    b.setflags(write=False)
    scale = grid.dt ** (-alpha) / math.gamma(2.0 - alpha)
    return L1Weights(alpha=alpha, grid=grid, b=b, scale=scale)


def l1_apply(history, weights: L1Weights):
    r"""Apply the L1 operator at the last index of ``history``.

    ``history`` holds ``y(t_0), ..., y(t_n)`` either as a 1d array of
    scalars or as an ``(n + 1, m)`` array of vectors; the result is

    .. math::

        \mathrm{scale} \sum_{i=0}^{n-1} b_{n-i} (y_{i+1} - y_i)

    (componentwise for vectors).
    """
    y = np.asarray(history, dtype=np.float64)
    n = y.shape[0] - 1
    if n < 1:
        raise InsufficientHistoryError("the L1 operator needs at least two history entries")
    if n > weights.N:
        raise InsufficientHistoryError(
            f"history spans {n} steps but the weights cover only {weights.N}"
        )

    coeffs = weights.b[:n][::-1]
    diffs = np.diff(y, axis=0)
    if y.ndim == 1:
        return weights.scale * float(weighted_row_sum(coeffs, diffs[:, None])[0])
    return weights.scale * weighted_row_sum(coeffs, diffs)


@dataclass(frozen=True)
class StepDecomposition:
    """L1 operator at step ``n`` split by history index.

    ``l1_apply(y^0..y^n) == diag * y^n + history @ y^1..y^{n-1} + init * y^0``.
    """

    diag: float
    history: np.ndarray
    init: float


def step_decomposition(n: int, weights: L1Weights) -> StepDecomposition:
    if not 1 <= n <= weights.N:
        raise StepIndexError(f"step index must be in 1..{weights.N}, got {n}")

    b = weights.b
    s = weights.scale
    # y^i, 1 <= i <= n-1, appears in two consecutive differences:
    # +b_{n-i+1} (as the right end) and -b_{n-i} (as the left end).
    i = np.arange(1, n)
    history = s * (b[n - i] - b[n - i - 1])
    return StepDecomposition(diag=s * b[0], history=history, init=-s * b[n - 1])
