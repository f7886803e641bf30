"""Problem definitions: the shared diffusivity, the manufactured problem and ZFK.

All callables are module-level functions (bound with :func:`functools.partial`
where they depend on the order), so a :class:`ProblemSpec` pickles cleanly and
can be shipped to worker processes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np

from .errors import DiffusivityBoundError
from .fractional_time import check_order

Diffusivity = Callable[[np.ndarray, float], np.ndarray]
Source = Callable[[np.ndarray, float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemSpec:
    """``d^alpha_t u = (D u_x)_x + f(x, t, u)`` on (0, 1), ``u = 0`` at x = 0, 1."""

    name: str
    alpha: float
    T: float
    D: Diffusivity
    f: Source
    phi: Callable[[np.ndarray], np.ndarray]
    dD_dx: Optional[Diffusivity] = None
    exact: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    D_minus: Optional[float] = None
    D_plus: Optional[float] = None
    F: Optional[float] = None
    L: Optional[float] = None

    def __post_init__(self) -> None:
        check_order(self.alpha)
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got {self.T}")


# {{{ shared diffusivity


def shared_diffusivity(x, t):
    x = np.asarray(x, dtype=np.float64)
    return 0.1 * (1.0 + np.sqrt(t) * np.cbrt(x * (1.0 - x)) ** 2)


def shared_diffusivity_dx(x, t):
    # singular like (x(1-x))^{-1/3} at the ends; set to 0 there to keep it total
    x = np.asarray(x, dtype=np.float64)
    w = x * (1.0 - x)
    inside = w > 0.0
    safe = np.where(inside, w, 1.0)
    val = 0.1 * np.sqrt(t) * (2.0 / 3.0) * (1.0 - 2.0 * x) / np.cbrt(safe)
    return np.where(inside, val, 0.0)


SHARED_D_MINUS = 0.1
SHARED_D_PLUS = 0.1 * (1.0 + 0.25 ** (2.0 / 3.0))


def make_shared_diffusivity() -> tuple[Diffusivity, Diffusivity]:
    """Return ``D(x, t) = (1 + sqrt(t) (x(1-x))^{2/3}) / 10`` and its x-derivative."""
    return shared_diffusivity, shared_diffusivity_dx


# }}}

# {{{ engineered problem


def _sine(x):
    return np.sin(np.pi * np.asarray(x, dtype=np.float64))


def engineered_exact(x, t, alpha):
    return (1.0 + t**alpha) * _sine(x)


def engineered_source(x, t, u, alpha):
    x = np.asarray(x, dtype=np.float64)
    growth = 1.0 + t**alpha
    react = math.gamma(alpha + 1.0) / growth + np.pi**2 * shared_diffusivity(x, t)
    return react * u - np.pi * growth * np.cos(np.pi * x) * shared_diffusivity_dx(x, t)


def make_engineered(alpha: float, T: float = 1.0) -> ProblemSpec:
    """Manufactured problem with exact solution ``(1 + t^alpha) sin(pi x)``."""
    alpha = check_order(alpha)
    return ProblemSpec(
        name="engineered",
        alpha=alpha,
        T=T,
        D=shared_diffusivity,
        dD_dx=shared_diffusivity_dx,
        f=partial(engineered_source, alpha=alpha),
        phi=_sine,
        exact=partial(engineered_exact, alpha=alpha),
        D_minus=SHARED_D_MINUS,
        D_plus=SHARED_D_PLUS,
    )


# }}}

# {{{ ZFK


def zeldovich_number(t):
    return 14.0 + 6.0 * np.sin(5.0 * np.pi * t)


def zfk_source(x, t, u):
    """Arrhenius-type ZFK reaction ``(beta^2 / 2) u (1 - u) exp(-beta (1 - u))``."""
    beta = zeldovich_number(t)
    u = np.asarray(u, dtype=np.float64)
    return 0.5 * beta**2 * u * (1.0 - u) * np.exp(-beta * (1.0 - u))


def zfk_source_growing(x, t, u):
    """Variant with ``exp(+beta (1 - u))``.

    Its u-derivative near ``u = 0`` is of order ``beta^2 e^beta / 2 ~ 1e8``,
    far beyond what the explicitly extrapolated source can follow; the time
    march breaks down on any practical grid.  Kept for demonstrating that.
    """
    beta = zeldovich_number(t)
    u = np.asarray(u, dtype=np.float64)
    return 0.5 * beta**2 * u * (1.0 - u) * np.exp(beta * (1.0 - u))


def hat(x):
    return 0.5 - np.abs(np.asarray(x, dtype=np.float64) - 0.5)


def make_zfk(alpha: float, T: float = 1.0, growing_exponent: bool = False) -> ProblemSpec:
    """Fractional ZFK flame equation with the hat initial condition.

    ``growing_exponent=True`` selects :func:`zfk_source_growing`.
    """
    alpha = check_order(alpha)
    return ProblemSpec(
        name="zfk",
        alpha=alpha,
        T=T,
        D=shared_diffusivity,
        dD_dx=shared_diffusivity_dx,
        f=zfk_source_growing if growing_exponent else zfk_source,
        phi=hat,
        D_minus=SHARED_D_MINUS,
        D_plus=SHARED_D_PLUS,
    )


ZFK_SHORT_T = 1e-4
ZFK_SHORT_N = 2**13
ZFK_SHORT_M = 2**6 + 1


def make_zfk_short(alpha: float) -> ProblemSpec:
    """ZFK on the short horizon ``T = 1e-4`` used for the derivative blow-up study."""
    spec = make_zfk(alpha, T=ZFK_SHORT_T)
    return ProblemSpec(**{**spec.__dict__, "name": "zfk-short"})


# }}}

PRESETS = {
    "engineered": make_engineered,
    "zfk": make_zfk,
    "zfk-short": make_zfk_short,
}


def make_preset(name: str, alpha: float, T: Optional[float] = None) -> ProblemSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    spec = factory(alpha)
    if T is not None and T != spec.T:
        spec = ProblemSpec(**{**spec.__dict__, "T": float(T)})
    return spec


# {{{ validation


@dataclass(frozen=True)
class ValidationReport:
    name: str
    D_min: float
    D_max: float
    D_positive: bool
    D_within_bounds: Optional[bool]
    lipschitz_estimate: float
    source_bound: float
    affine_source_bound: float
    u_range: tuple[float, float]
    phi_boundary: tuple[float, float]
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.D_positive and self.D_within_bounds is not False

    def lines(self) -> list[str]:
        out = [
            f"problem: {self.name}",
            f"D range: [{self.D_min:.8g}, {self.D_max:.8g}]",
            f"D positive: {self.D_positive}",
            f"D within declared bounds: {self.D_within_bounds}",
            f"u range: [{self.u_range[0]:g}, {self.u_range[1]:g}]",
            f"Lipschitz estimate of f in u: {self.lipschitz_estimate:.6g}",
            f"sup |f|: {self.source_bound:.6g}",
            f"sup |f| / (1 + |u|): {self.affine_source_bound:.6g}",
            f"phi(0), phi(1): {self.phi_boundary[0]:.3g}, {self.phi_boundary[1]:.3g}",
        ]
        out += [f"warning: {w}" for w in self.warnings]
        return out


def validate(
    spec: ProblemSpec,
    samples: int = 201,
    u_range: tuple[float, float] = (-0.5, 1.5),
    lipschitz_warn: float = 1e6,
) -> ValidationReport:
    """Sample the structural assumptions on ``D``, ``f`` and ``phi``.

    Raises :class:`DiffusivityBoundError` if ``D`` is not positive on the
    sample grid.  A large or non-finite Lipschitz estimate only warns.
    """
    x = np.linspace(0.0, 1.0, samples)
    t = np.linspace(0.0, spec.T, samples)
    dvals = np.array([np.asarray(spec.D(x, ti), dtype=np.float64) * np.ones_like(x) for ti in t])
    d_min, d_max = float(dvals.min()), float(dvals.max())
    if not d_min > 0.0:
        raise DiffusivityBoundError(f"{spec.name}: diffusivity reaches {d_min:.3e} <= 0")

    within = None
    if spec.D_minus is not None and spec.D_plus is not None:
        eps = 1e-12 * max(1.0, abs(spec.D_plus))
        within = bool(d_min >= spec.D_minus - eps and d_max <= spec.D_plus + eps)

    xs = np.linspace(0.0, 1.0, 41)[1:-1]
    ts = np.linspace(0.0, spec.T, 41)
    us = np.linspace(u_range[0], u_range[1], 401)
    X, TT, U = np.meshgrid(xs, ts, us, indexing="ij")
    fvals = np.empty_like(U)
    for k, ti in enumerate(ts):
        fvals[:, k, :] = spec.f(X[:, k, :], float(ti), U[:, k, :])
    with np.errstate(invalid="ignore", over="ignore"):
        slopes = np.abs(np.diff(fvals, axis=2)) / np.diff(us)[None, None, :]
    lip = float(np.max(slopes))
    src = float(np.max(np.abs(fvals)))
    affine = float(np.max(np.abs(fvals) / (1.0 + np.abs(U))))

    msgs = []
    if not np.isfinite(lip) or lip > lipschitz_warn:
        msgs.append(
            f"f is not uniformly Lipschitz at this scale on u in {u_range}: estimate {lip:.3e}"
        )
    if within is False:
        msgs.append("diffusivity leaves its declared bounds")
    for m in msgs:
        warnings.warn(f"{spec.name}: {m}", stacklevel=2)

    pb = np.asarray(spec.phi(np.array([0.0, 1.0])), dtype=np.float64)
    return ValidationReport(
        name=spec.name,
        D_min=d_min,
        D_max=d_max,
        D_positive=True,
        D_within_bounds=within,
        lipschitz_estimate=lip,
        source_bound=src,
        affine_source_bound=affine,
        u_range=tuple(u_range),
        phi_boundary=(float(pb[0]), float(pb[1])),
        warnings=tuple(msgs),
    )


# }}}
