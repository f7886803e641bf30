import numpy as np
import pytest
from scipy import integrate

from l1galerkin.errors import BasisIndexError, DiffusivityBoundError, MeshError
from l1galerkin.fem1d import (
    FeFunction,
    SpatialMesh,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    eval_basis,
    interpolate,
    l2_difference,
    l2_error,
    l2_norm,
    project_initial,
)
from l1galerkin.problems import hat, shared_diffusivity


def tent_vector(mesh, i):
    e = np.zeros(mesh.n_dofs)
    e[i - 2] = 1.0
    return e


class TestMesh:
    def test_nodes(self):
        m = SpatialMesh(5)
        assert m.h == 0.25
        np.testing.assert_array_equal(m.nodes, [0, 0.25, 0.5, 0.75, 1.0])
        assert m.n_dofs == 3

    def test_refine_nests(self):
        m = SpatialMesh(16).refine()
        assert m.M == 31
        np.testing.assert_allclose(m.nodes[::2], SpatialMesh(16).nodes, atol=1e-15)

    def test_too_small(self):
        with pytest.raises(MeshError):
            SpatialMesh(2)

    def test_quadrature_points_interior(self):
        m = SpatialMesh(9)
        assert m.quad_x.min() > 0.0 and m.quad_x.max() < 1.0
        assert m.quad_w.sum() == pytest.approx(m.h)


class TestBasis:
    def test_tent_values(self):
        m = SpatialMesh(9)
        i = 4
        xi = m.nodes[i - 1]
        assert eval_basis(m, i, xi) == 1.0
        assert eval_basis(m, i, m.nodes[i - 2]) == 0.0
        assert eval_basis(m, i, m.nodes[i]) == 0.0
        assert eval_basis(m, i, 0.5 * (m.nodes[i - 2] + xi)) == pytest.approx(0.5)
        assert eval_basis(m, i, 0.9) == 0.0

    @pytest.mark.parametrize("i", [1, 9])
    def test_interior_only(self, i):
        with pytest.raises(BasisIndexError):
            eval_basis(SpatialMesh(9), i, 0.5)


class TestMass:
    def test_entries(self):
        m = SpatialMesh(7)
        S = assemble_mass(m).to_dense()
        h = m.h
        np.testing.assert_allclose(np.diag(S), 2 * h / 3)
        np.testing.assert_allclose(np.diag(S, 1), h / 6)
        assert np.all(np.triu(S, 2) == 0)

    def test_entries_by_quadrature(self):
        m = SpatialMesh(6)
        S = assemble_mass(m).to_dense()
        for i in range(2, 6):
            for j in range(2, 6):
                val, _ = integrate.quad(
                    lambda x: eval_basis(m, i, x) * eval_basis(m, j, x), 0, 1,
                    points=m.nodes, epsabs=1e-13,
                )
                assert S[i - 2, j - 2] == pytest.approx(val, abs=1e-12)

    def test_spd(self):
        S = assemble_mass(SpatialMesh(12)).to_dense()
        np.testing.assert_array_equal(S, S.T)
        np.linalg.cholesky(S)


class TestStiffness:
    def test_unit_coefficient(self):
        m = SpatialMesh(9)
        A = assemble_stiffness(m, lambda x, t: 1.0, 0.0).to_dense()
        np.testing.assert_allclose(np.diag(A), 2 / m.h, rtol=1e-14)
        np.testing.assert_allclose(np.diag(A, 1), -1 / m.h, rtol=1e-14)
        np.testing.assert_allclose(np.diag(A, -1), -1 / m.h, rtol=1e-14)

    def test_scaled_coefficient(self):
        m = SpatialMesh(9)
        A1 = assemble_stiffness(m, lambda x, t: np.ones_like(x), 0.0).to_dense()
        A3 = assemble_stiffness(m, lambda x, t: 3.5 * np.ones_like(x), 0.0).to_dense()
        np.testing.assert_allclose(A3, 3.5 * A1, rtol=1e-14)

    @staticmethod
    def _oracle(m, t):
        h = m.h
        ref = np.zeros((m.n_dofs, m.n_dofs))
        for e in range(m.n_elements):
            k = integrate.quad(
                lambda x: float(shared_diffusivity(x, t)), m.nodes[e], m.nodes[e + 1],
                epsabs=1e-14, epsrel=1e-13, limit=200,
            )[0] / h**2
            dofs = [d for d in (e - 1, e) if 0 <= d < m.n_dofs]
            sign = {e - 1: -1.0, e: 1.0}
            for a in dofs:
                for b in dofs:
                    ref[a, b] += sign[a] * sign[b] * k
        return ref

    def test_shared_diffusivity_interior_elements(self):
        m = SpatialMesh(5)
        A = assemble_stiffness(m, shared_diffusivity, 1.0).to_dense()
        ref = self._oracle(m, 1.0)
        interior = np.ones_like(A, dtype=bool)
        interior[0, 0] = interior[-1, -1] = False
        np.testing.assert_allclose(A[interior], ref[interior], rtol=0, atol=1e-8)

    def test_shared_diffusivity_boundary_elements(self):
        # (x(1-x))^(2/3) is singular in the end elements; 4 points miss by ~1e-4
        m = SpatialMesh(5)
        ref = self._oracle(m, 1.0)
        A4 = assemble_stiffness(m, shared_diffusivity, 1.0).to_dense()
        assert abs(A4[0, 0] - ref[0, 0]) < 1e-4
        A = assemble_stiffness(SpatialMesh(5, quad_points=128), shared_diffusivity, 1.0).to_dense()
        np.testing.assert_allclose(A, ref, rtol=0, atol=1e-8)

    def test_symmetric_positive_definite(self):
        A = assemble_stiffness(SpatialMesh(17), shared_diffusivity, 0.7).to_dense()
        np.testing.assert_array_equal(A, A.T)
        assert np.linalg.eigvalsh(A).min() > 0

    def test_linear_in_diffusivity(self):
        m = SpatialMesh(11)
        D1 = shared_diffusivity
        D2 = lambda x, t: 1.0 + x**2 * t  # noqa: E731
        a, b = 0.3, 2.0
        combo = assemble_stiffness(m, lambda x, t: a * D1(x, t) + b * D2(x, t), 0.5).to_dense()
        sep = a * assemble_stiffness(m, D1, 0.5).to_dense() + b * assemble_stiffness(m, D2, 0.5).to_dense()
        np.testing.assert_allclose(combo, sep, rtol=1e-13)

    def test_rejects_nonpositive_diffusivity(self):
        with pytest.raises(DiffusivityBoundError):
            assemble_stiffness(SpatialMesh(5), lambda x, t: x - 0.5, 0.0)


class TestLoad:
    def test_zero_source(self):
        m = SpatialMesh(9)
        u = FeFunction(m, np.ones(m.n_dofs))
        np.testing.assert_array_equal(assemble_load(m, lambda x, t, u: 0.0, 0.0, u), 0.0)

    def test_unit_source(self):
        m = SpatialMesh(9)
        u = FeFunction(m, np.zeros(m.n_dofs))
        np.testing.assert_allclose(assemble_load(m, lambda x, t, u: 1.0, 0.0, u), m.h, rtol=1e-14)

    def test_identity_source_gives_mass_column(self):
        m = SpatialMesh(9)
        S = assemble_mass(m).to_dense()
        for j in range(2, 9):
            F = assemble_load(m, lambda x, t, u: u, 0.0, FeFunction(m, tent_vector(m, j)))
            np.testing.assert_allclose(F, S[:, j - 2], atol=1e-15)


class TestProjection:
    def test_identity_on_tents(self):
        m = SpatialMesh(9)
        tent = lambda x: eval_basis(m, 5, x)  # noqa: E731
        np.testing.assert_allclose(project_initial(m, tent).coeffs, tent_vector(m, 5), atol=1e-12)

    def test_sine_second_order(self):
        errs = [l2_error(project_initial(SpatialMesh(M), lambda x: np.sin(np.pi * x)), lambda x: np.sin(np.pi * x)) for M in (17, 33, 65, 129)]
        np.testing.assert_allclose(np.log2(np.array(errs[:-1]) / errs[1:]), 2.0, atol=0.05)

    def test_hat_recovered_when_kink_is_node(self):
        m = SpatialMesh(17)
        np.testing.assert_allclose(project_initial(m, hat).coeffs, hat(m.interior_nodes), atol=1e-12)

    def test_galerkin_orthogonality(self):
        m = SpatialMesh(12)
        phi = lambda x: np.exp(x) * np.sin(3 * x) * x * (1 - x)  # noqa: E731
        P = project_initial(m, phi)
        # residual inner products computed with an independent adaptive rule
        norm = np.sqrt(integrate.quad(lambda x: phi(x) ** 2, 0, 1)[0])
        for i in range(2, 12):
            r, _ = integrate.quad(
                lambda x: (phi(x) - P(x)) * eval_basis(m, i, x), 0, 1, points=m.nodes, epsabs=1e-15
            )
            assert abs(r) <= 1e-12 * norm


class TestNorms:
    def test_zero(self):
        m = SpatialMesh(6)
        assert l2_norm(FeFunction(m, np.zeros(4))) == 0.0

    def test_norm_matches_quadrature(self):
        m = SpatialMesh(10)
        u = FeFunction(m, np.random.default_rng(1).normal(size=m.n_dofs))
        assert l2_norm(u) == pytest.approx(l2_error(u, lambda x: 0.0 * x), rel=1e-12)
        S = assemble_mass(m).to_dense()
        assert l2_norm(u) ** 2 == pytest.approx(u.coeffs @ S @ u.coeffs, rel=1e-14)

    def test_piecewise_linear_exact_has_zero_error(self):
        m = SpatialMesh(17)
        u = interpolate(m, hat)
        assert l2_error(u, hat) < 1e-15

    def test_difference_on_nested_meshes(self):
        coarse = SpatialMesh(9)
        fine = coarse.refine()
        g = lambda x: np.sin(np.pi * x)  # noqa: E731
        uc, uf = interpolate(coarse, g), interpolate(fine, g)
        ref = np.sqrt(integrate.quad(lambda x: (uf(x) - uc(x)) ** 2, 0, 1, points=fine.nodes, limit=200)[0])
        assert l2_difference(uc, uf) == pytest.approx(ref, rel=1e-10)
        assert l2_difference(uf, uc) == pytest.approx(ref, rel=1e-10)
        with pytest.raises(MeshError):
            l2_difference(uc, interpolate(SpatialMesh(12), g))
