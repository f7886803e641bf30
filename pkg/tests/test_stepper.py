import json
from math import gamma
import os
import subprocess
import sys

import numpy as np
import pytest

from l1galerkin.errors import FirstStepDivergenceError, IllPosedStepError, MeshError
from l1galerkin.fem1d import (
    FeFunction,
    SpatialMesh,
    Tridiagonal,
    assemble_mass,
    assemble_stiffness,
    l2_norm,
    project_initial,
)
from l1galerkin.fractional_time import TimeGrid
from l1galerkin.problems import ProblemSpec, hat, make_engineered, make_zfk
from l1galerkin.stepper import (
    SolverOptions,
    extrapolate,
    first_step,
    init_state,
    solve,
    step,
)
from l1galerkin.stepper import _solve as solve_tridiagonal_step


def unit_D(x, t):
    return np.ones_like(np.asarray(x, dtype=float))


def zero_f(x, t, u):
    return np.zeros_like(np.asarray(u, dtype=float))


def sine(x):
    return np.sin(np.pi * x)


def heat_spec(alpha=0.5, phi=sine, f=zero_f):
    return ProblemSpec("heat", alpha, 1.0, unit_D, f, phi)


class TestExtrapolate:
    def test_constant(self):
        c = np.full(5, 3.25)
        np.testing.assert_array_equal(extrapolate(c, c), c)

    def test_affine_exact(self):
        t = np.linspace(0, 1, 11)
        y = 2.0 - 3.0 * t
        for n in range(2, 11):
            assert extrapolate(y[n - 1], y[n - 2]) == pytest.approx(y[n], abs=1e-14)

    def test_mismatch(self):
        with pytest.raises(MeshError):
            extrapolate(np.zeros(3), np.zeros(4))

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
    def test_fractional_power_bound(self, alpha):
        ratios = []
        for N in (64, 256, 1024, 4096):
            dt = 1.0 / N
            t = np.arange(N + 1) * dt
            y = t**alpha
            n = np.arange(2, N + 1)
            err = np.abs(extrapolate(y[n - 1], y[n - 2]) - y[n])
            bound = dt + dt**alpha * n ** (alpha - 1.0)
            ratios.append(np.max(err / bound))
        # one constant serves every grid
        assert max(ratios) < 2.0


class TestFirstStep:
    def test_linear_solve_when_source_vanishes(self):
        mesh, grid = SpatialMesh(17), TimeGrid(1.0, 16)
        state = init_state(heat_spec(), mesh, grid)
        y1 = first_step(state)
        lhs = assemble_mass(mesh).scaled(state.weights.scale) + assemble_stiffness(mesh, unit_D, grid.t(1))
        expected = np.linalg.solve(lhs.to_dense(), state.weights.scale * (state.S @ state.history[0]))
        np.testing.assert_allclose(y1, expected, rtol=1e-12, atol=1e-14)
        assert state.n == 1 and state.first_step_iterations <= 2

    def test_linear_source_matches_folded_system(self):
        c = 0.75

        def f(x, t, u):
            return c * np.asarray(u)

        mesh, grid = SpatialMesh(17), TimeGrid(1.0, 32)
        spec = ProblemSpec("linear", 0.5, 1.0, unit_D, f, hat)
        state = init_state(spec, mesh, grid)
        y1 = first_step(state, tol=1e-13)
        S = state.S.to_dense()
        A = assemble_stiffness(mesh, unit_D, grid.t(1)).to_dense()
        folded = state.weights.scale * S + A - c * S
        direct = np.linalg.solve(folded, state.weights.scale * S @ state.history[0])
        np.testing.assert_allclose(y1, direct, atol=1e-12)

    def test_engineered_converges_in_time(self):
        mesh = SpatialMesh(2**6)
        spec = make_engineered(0.5)
        errs = []
        for N in (2**6, 2**8, 2**10):
            grid = TimeGrid(1.0, N)
            state = init_state(spec, mesh, grid)
            y1 = first_step(state)
            ref = project_initial(mesh, lambda x: spec.exact(x, grid.t(1))).coeffs
            errs.append(l2_norm(FeFunction(mesh, y1 - ref)))
        assert errs[0] > errs[1] > errs[2]
        # the first L1 step is only O(dt^alpha) accurate
        rates = np.log2(np.array(errs[:-1]) / errs[1:]) / 2
        np.testing.assert_allclose(rates, 0.5, atol=0.1)

    def test_substitution_residual(self):
        spec = make_engineered(1 / 3)
        state = init_state(spec, SpatialMesh(33), TimeGrid(1.0, 64), SolverOptions(check_residual=True))
        first_step(state)
        assert state.residuals[0] <= 1e-10 * state.weights.scale

    def test_needs_fresh_state(self):
        state = init_state(heat_spec(), SpatialMesh(9), TimeGrid(1.0, 4))
        first_step(state)
        with pytest.raises(ValueError):
            first_step(state)

    def test_divergence(self):
        def f(x, t, u):
            return 1e6 * np.asarray(u) ** 2 + 1.0

        state = init_state(heat_spec(f=f), SpatialMesh(9), TimeGrid(1.0, 4))
        with pytest.raises(FirstStepDivergenceError) as info, np.errstate(all="ignore"):
            first_step(state, max_iter=20)
        assert not np.isfinite(info.value.residual) or info.value.residual > 1e-12


class TestStep:
    def test_requires_first_step(self):
        state = init_state(heat_spec(), SpatialMesh(9), TimeGrid(1.0, 4))
        with pytest.raises(ValueError):
            step(state)

    def test_grid_exhausted(self):
        state = init_state(heat_spec(), SpatialMesh(9), TimeGrid(1.0, 2))
        first_step(state)
        step(state)
        with pytest.raises(ValueError):
            step(state)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
    def test_stability_without_source(self, alpha):
        traj = solve(heat_spec(alpha), SpatialMesh(33), TimeGrid(1.0, 128))
        norms = np.array([l2_norm(traj.at(n)) for n in range(len(traj))])
        assert np.all(norms <= norms[0] * (1 + 1e-12))
        assert np.all(np.diff(norms) <= 1e-14)

    @pytest.mark.parametrize("alpha", [1 / 3, 0.5, 2 / 3])
    def test_residual_identity(self, alpha):
        opts = SolverOptions(check_residual=True)
        grid = TimeGrid(1.0, 128)
        traj = solve(make_engineered(alpha), SpatialMesh(33), grid, opts)

        scale = grid.dt**-alpha / gamma(2 - alpha)
        assert traj.residuals.shape == (128,)
        assert traj.residuals.max() <= 1e-10 * scale

    def test_engineered_bounded_norms(self):
        spec = make_engineered(0.5)
        traj = solve(spec, SpatialMesh(33), TimeGrid(1.0, 64))
        norms = np.array([l2_norm(traj.at(n)) for n in range(len(traj))])
        assert norms.max() <= 10 * (norms[0] + 1.0)

    def test_linear_problem_extrapolation_invariance(self):
        def f(x, t, u):
            return np.sin(3 * x) * (1 + t) + 0.0 * np.asarray(u)

        spec = ProblemSpec("forced", 0.4, 1.0, unit_D, f, hat)
        mesh, grid = SpatialMesh(17), TimeGrid(1.0, 32)
        a = solve(spec, mesh, grid, SolverOptions(extrapolate=True))
        b = solve(spec, mesh, grid, SolverOptions(extrapolate=False))
        np.testing.assert_array_equal(a.coeffs, b.coeffs)

    def test_non_finite_solution_is_reported_with_step(self):
        def f(x, t, u):
            return np.full_like(np.asarray(u, dtype=float), np.nan if t > 0.5 else 0.0)

        with pytest.raises(IllPosedStepError) as info:
            solve(heat_spec(f=f), SpatialMesh(9), TimeGrid(1.0, 8))
        assert info.value.step == 5

    def test_zero_pivot(self):
        bad = Tridiagonal.symmetric(np.zeros(3), np.zeros(2))
        with pytest.raises(IllPosedStepError) as info:
            solve_tridiagonal_step(bad, np.ones(3), 7)
        assert info.value.step == 7


class TestSolve:
    def test_single_step(self):
        spec = make_engineered(0.5)
        mesh, grid = SpatialMesh(9), TimeGrid(1.0, 1)
        traj = solve(spec, mesh, grid)
        state = init_state(spec, mesh, grid)
        y1 = first_step(state)
        assert len(traj) == 2
        np.testing.assert_array_equal(traj.coeffs[0], project_initial(mesh, spec.phi).coeffs)
        np.testing.assert_array_equal(traj.coeffs[1], y1)

    def test_zero_data(self):
        spec = heat_spec(phi=lambda x: 0.0 * np.asarray(x))
        traj = solve(spec, SpatialMesh(9), TimeGrid(1.0, 16))
        assert not np.any(traj.coeffs)

    def test_deterministic(self):
        spec = make_engineered(2 / 3)
        mesh, grid = SpatialMesh(17), TimeGrid(1.0, 32)
        np.testing.assert_array_equal(solve(spec, mesh, grid).coeffs, solve(spec, mesh, grid).coeffs)

    def test_growing_exponent_variant_breaks_down(self):
        spec = make_zfk(0.5, growing_exponent=True)
        with pytest.raises((FirstStepDivergenceError, IllPosedStepError)):
            solve(spec, SpatialMesh(65), TimeGrid(1.0, 64))

    @pytest.mark.slow
    def test_zfk_snapshots_qualitative(self):
        mesh, grid = SpatialMesh(2**6), TimeGrid(1.0, 2**12)
        early, half = grid.N // 16, grid.N // 2
        early_move, late_move = {}, {}
        for alpha in (1 / 3, 2 / 3):
            traj = solve(make_zfk(alpha), mesh, grid)
            uT = traj.final.nodal_values
            assert np.all(np.isfinite(uT)) and uT.min() > -0.05 and uT.max() < 1.05
            # the kink at the peak is smoothed out and mass moves outwards
            assert uT.max() < hat(0.5)
            d = lambda a, b: l2_norm(FeFunction(mesh, traj.coeffs[a] - traj.coeffs[b]))  # noqa: E731
            early_move[alpha] = d(early, 0)
            late_move[alpha] = d(grid.N, half)
            # fast initial motion: the first 1/16 of the run moves more than the last half
            assert early_move[alpha] > late_move[alpha]
        assert early_move[1 / 3] > early_move[2 / 3]
        assert late_move[2 / 3] > late_move[1 / 3]


def test_numpy_backend_matches_numba():
    code = (
        "import json, numpy as np;"
        "from l1galerkin import _backend;"
        "from l1galerkin.problems import make_zfk;"
        "from l1galerkin.fem1d import SpatialMesh;"
        "from l1galerkin.fractional_time import TimeGrid;"
        "from l1galerkin.stepper import solve;"
        "tr = solve(make_zfk(0.5), SpatialMesh(33), TimeGrid(1.0, 64));"
        "print(json.dumps({'backend': _backend.BACKEND, 'y': tr.final.coeffs.tolist()}))"
    )
    env = dict(os.environ, L1GALERKIN_BACKEND="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    res = json.loads(out.stdout)
    assert res["backend"] == "numpy"
    ref = solve(make_zfk(0.5), SpatialMesh(33), TimeGrid(1.0, 64)).final.coeffs
    np.testing.assert_allclose(res["y"], ref, rtol=1e-11, atol=1e-13)
