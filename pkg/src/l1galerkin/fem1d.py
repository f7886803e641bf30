"""Piecewise-linear Galerkin discretization on a uniform mesh of [0, 1].

Nodes are ``x_i = (i - 1) h`` for ``i = 1..M`` (``M`` counts nodes, so there
are ``M - 1`` elements and ``M - 2`` interior degrees of freedom).  The
homogeneous Dirichlet condition is built in: every matrix and vector lives
on the interior nodes only, and interior DOF ``k`` (0-based) corresponds to
node ``i = k + 2``.

Integrals over elements use a fixed Gauss-Legendre rule (4 points by
default), whose nodes are strictly inside each element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BasisIndexError, DiffusivityBoundError, MeshError
from .kernels import thomas_solve, tridiag_matvec

QUAD_POINTS = 4


def gauss_rule(npts: int = QUAD_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to the reference interval [0, 1]."""
    xi, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (xi + 1.0), 0.5 * w


@dataclass(frozen=True)
class SpatialMesh:
    M: int
    quad_points: int = QUAD_POINTS

    def __post_init__(self) -> None:
        if int(self.M) != self.M or self.M < 3:
            raise MeshError(f"mesh needs at least 3 nodes, got M = {self.M}")

    @property
    def h(self) -> float:
        return 1.0 / (self.M - 1)

    @property
    def n_elements(self) -> int:
        return self.M - 1

    @property
    def n_dofs(self) -> int:
        return self.M - 2

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.M) * self.h
        x[-1] = 1.0
        return x

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]

    @cached_property
    def _quad(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        # physical quadrature points (n_elements, q), weights (q,), and the
        # reference coordinate of each point (q,)
        ref, w = gauss_rule(self.quad_points)
        xq = self.nodes[:-1, None] + self.h * ref[None, :]
        return xq, w * self.h, ref

    @property
    def quad_x(self) -> np.ndarray:
        return self._quad[0]

    @property
    def quad_w(self) -> np.ndarray:
        return self._quad[1]

    def refine(self) -> "SpatialMesh":
        """Mesh with every element bisected (``M - 1`` doubled)."""
        return SpatialMesh(2 * (self.M - 1) + 1, self.quad_points)


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric-storage-agnostic tridiagonal matrix as three diagonals.

    ``lower[0]`` and ``upper[-1]`` are unused and kept at zero.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def __matmul__(self, x):
        return tridiag_matvec(self.lower, self.diag, self.upper, np.asarray(x, dtype=np.float64))

    def __add__(self, other: "Tridiagonal") -> "Tridiagonal":
        return Tridiagonal(self.lower + other.lower, self.diag + other.diag, self.upper + other.upper)

    def scaled(self, c: float) -> "Tridiagonal":
        return Tridiagonal(c * self.lower, c * self.diag, c * self.upper)

    def solve(self, rhs):
        return thomas_solve(self.lower, self.diag, self.upper, rhs)

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        if self.size > 1:
            a += np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)
        return a

    @classmethod
    def symmetric(cls, diag, off) -> "Tridiagonal":
        """Build from the diagonal and the ``n - 1`` entries above it."""
        diag = np.asarray(diag, dtype=np.float64)
        off = np.asarray(off, dtype=np.float64)
        lower = np.concatenate(([0.0], off))
        upper = np.concatenate((off, [0.0]))
        return cls(lower, diag.copy(), upper)


@dataclass
class FeFunction:
    """``u_h = sum_k coeffs[k] * psi_{k+2}`` on ``mesh``; zero at both ends."""

    mesh: SpatialMesh
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (self.mesh.n_dofs,):
            raise MeshError(
                f"expected {self.mesh.n_dofs} coefficients, got shape {self.coeffs.shape}"
            )

    @property
    def nodal_values(self) -> np.ndarray:
        return nodal_values(self.coeffs)

    def __call__(self, x):
        return evaluate(self.mesh, self.coeffs, x)


def nodal_values(coeffs: np.ndarray) -> np.ndarray:
    """Pad interior coefficients with the two zero boundary values."""
    return np.concatenate(([0.0], coeffs, [0.0]))


def evaluate(mesh: SpatialMesh, coeffs, x):
    """Evaluate the piecewise-linear interpolant of ``coeffs`` at points ``x``."""
    x = np.asarray(x, dtype=np.float64)
    u = nodal_values(np.asarray(coeffs, dtype=np.float64))
    e = np.clip(np.floor(x / mesh.h).astype(np.intp), 0, mesh.n_elements - 1)
    s = (x - mesh.nodes[e]) / mesh.h
    return (1.0 - s) * u[e] + s * u[e + 1]


def _values_at_quadrature(mesh: SpatialMesh, coeffs) -> np.ndarray:
    u = nodal_values(np.asarray(coeffs, dtype=np.float64))
    ref = mesh._quad[2]
    return u[:-1, None] * (1.0 - ref[None, :]) + u[1:, None] * ref[None, :]


def eval_basis(mesh: SpatialMesh, i: int, x):
    """Tent function ``psi_{h,i}`` for the interior node ``i`` (1-based, 2..M-1)."""
    if not 2 <= i <= mesh.M - 1:
        raise BasisIndexError(f"interior basis index must be in 2..{mesh.M - 1}, got {i}")
    x = np.asarray(x, dtype=np.float64)
    xi = mesh.nodes[i - 1]
    return np.clip(1.0 - np.abs(x - xi) / mesh.h, 0.0, None)


def assemble_mass(mesh: SpatialMesh) -> Tridiagonal:
    n = mesh.n_dofs
    h = mesh.h
    return Tridiagonal.symmetric(np.full(n, 2.0 * h / 3.0), np.full(n - 1, h / 6.0))


def element_integrals(mesh: SpatialMesh, g, t: float) -> np.ndarray:
    """Return the per-element quadrature values and the integrals of ``g(x, t)``."""
    gq = np.asarray(g(mesh.quad_x, t), dtype=np.float64) * np.ones_like(mesh.quad_x)
    return gq, gq @ mesh.quad_w


def assemble_stiffness(mesh: SpatialMesh, D, t: float) -> Tridiagonal:
    """Stiffness ``A_ij = int D(x, t) psi_i' psi_j' dx`` on interior DOFs.

    Raises :class:`DiffusivityBoundError` if any quadrature sample of ``D``
    is not strictly positive.
    """
    dq, integral = element_integrals(mesh, D, t)
    if not np.all(dq > 0.0):
        raise DiffusivityBoundError(
            f"diffusivity must be positive; min sample {dq.min():.3e} at t = {t}"
        )
    # psi' = +-1/h on each element, so each element contributes int_e D / h^2
    k = integral / mesh.h**2
    diag = k[:-1] + k[1:]
    off = -k[1:-1]
    return Tridiagonal.symmetric(diag, off)


def assemble_load(mesh: SpatialMesh, f, t: float, u_eval) -> np.ndarray:
    """Load ``F_i = int f(x, t, u(x)) psi_i(x) dx`` on interior DOFs.

    ``u_eval`` is an :class:`FeFunction` or an interior coefficient vector;
    it is interpolated linearly to the quadrature points.
    """
    coeffs = u_eval.coeffs if isinstance(u_eval, FeFunction) else u_eval
    uq = _values_at_quadrature(mesh, coeffs)
    fq = np.asarray(f(mesh.quad_x, t, uq), dtype=np.float64) * np.ones_like(uq)
    return _integrate_against_tents(mesh, fq)


def _integrate_against_tents(mesh: SpatialMesh, gq: np.ndarray) -> np.ndarray:
    ref = mesh._quad[2]
    w = mesh.quad_w
    # element e feeds its left node e (weight 1 - s) and right node e + 1 (weight s)
    left = gq @ (w * (1.0 - ref))
    right = gq @ (w * ref)
    return left[1:] + right[:-1]


def project_initial(mesh: SpatialMesh, phi) -> FeFunction:
    """L2-orthogonal projection of ``phi`` onto the interior tent space."""
    phiq = np.asarray(phi(mesh.quad_x), dtype=np.float64) * np.ones_like(mesh.quad_x)
    rhs = _integrate_against_tents(mesh, phiq)
    return FeFunction(mesh, assemble_mass(mesh).solve(rhs))


def interpolate(mesh: SpatialMesh, g) -> FeFunction:
    """Nodal interpolant of ``g`` (boundary values discarded)."""
    return FeFunction(mesh, np.asarray(g(mesh.interior_nodes), dtype=np.float64))


def l2_norm(u: FeFunction) -> float:
    y = u.coeffs
    s = assemble_mass(u.mesh)
    return float(np.sqrt(max(float(y @ (s @ y)), 0.0)))


def l2_error(u: FeFunction, exact) -> float:
    """Quadrature L2 norm of ``u - exact`` over [0, 1], boundary elements included."""
    mesh = u.mesh
    diff = _values_at_quadrature(mesh, u.coeffs) - exact(mesh.quad_x)
    return float(np.sqrt(np.sum((diff**2) @ mesh.quad_w)))


def l2_difference(u: FeFunction, v: FeFunction) -> float:
    r"""L2 norm of ``u - v`` for FE functions on nested meshes.

    The coarser function is evaluated exactly (it is piecewise linear) at the
    finer mesh's quadrature points, so no projection error enters.
    """
    if u.mesh.n_elements % v.mesh.n_elements == 0:
        fine, coarse = u, v
    elif v.mesh.n_elements % u.mesh.n_elements == 0:
        fine, coarse = v, u
    else:
        raise MeshError(f"meshes with M = {u.mesh.M} and {v.mesh.M} are not nested")
    mesh = fine.mesh
    diff = _values_at_quadrature(mesh, fine.coeffs) - coarse(mesh.quad_x)
    return float(np.sqrt(np.sum((diff**2) @ mesh.quad_w)))
