"""Forward cG(1) solver, adjoint solver, and residual-pairing tests."""
import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from adaptive_mlmc.meshes import MeshError, TemporalMesh, uniform_mesh
from adaptive_mlmc.models import OdeProblem, SampleFailure, harmonic_oscillator
from adaptive_mlmc.solvers import (Trajectory, residual_pairing, restrict_mesh,
                                   solve_adjoint, solve_forward_cg1)


def linear_decay(rate=1.0):
    return OdeProblem(1,
                      lambda u, t: -rate * np.asarray(u, dtype=float),
                      lambda u, t: np.full(np.shape(u)[:-1] + (1, 1), -rate),
                      np.array([1.0]), 1.0)


def blow_up():
    # u' = u^2, u(0) = 2 blows up at t = 0.5 inside the horizon
    return OdeProblem(1,
                      lambda u, t: np.asarray(u, dtype=float) ** 2,
                      lambda u, t: 2.0 * np.asarray(u, dtype=float)[..., None],
                      np.array([2.0]), 1.0)


class TestTrajectory:
    def test_interpolation_and_slope(self):
        mesh = TemporalMesh(np.array([0.0, 1.0, 3.0]))
        traj = Trajectory(mesh, np.array([[0.0], [2.0], [4.0]]))
        assert traj(0.5)[0] == pytest.approx(1.0)
        assert traj(2.0)[0] == pytest.approx(3.0)
        np.testing.assert_allclose(traj(np.array([0.0, 3.0]))[:, 0], [0.0, 4.0])
        assert traj.slope(0)[0] == pytest.approx(2.0)
        assert traj.slope(1)[0] == pytest.approx(1.0)

    def test_shape_validation(self):
        mesh = uniform_mesh(1.0, 2)
        with pytest.raises(ValueError):
            Trajectory(mesh, np.zeros((2, 1)))


class TestForwardSolver:
    def test_exact_update_for_linear_decay(self):
        # cG(1) on u' = -u gives U_{n+1}/U_n = (1 - h/2)/(1 + h/2) exactly
        n = 16
        mesh = uniform_mesh(1.0, n)
        traj = solve_forward_cg1(linear_decay(), mesh)
        h = 1.0 / n
        expected = ((1.0 - h / 2.0) / (1.0 + h / 2.0)) ** np.arange(n + 1)
        np.testing.assert_allclose(traj.values[:, 0], expected, rtol=3e-15)

    def test_second_order_convergence(self):
        problem = harmonic_oscillator(50.0, 0.25)
        ref = solve_ivp(lambda t, y: problem.rhs(y, t), (0.0, 3.0),
                        problem.initial,
                        rtol=1e-12, atol=1e-12, dense_output=True)
        errors = []
        for n in (64, 128, 256):
            traj = solve_forward_cg1(problem, uniform_mesh(3.0, n))
            errors.append(abs(traj.values[-1, 0] - ref.sol(3.0)[0]))
        orders = np.log2(np.array(errors[:-1]) / errors[1:])
        assert np.all(orders > 1.8)

    def test_mesh_must_cover_horizon(self):
        with pytest.raises(MeshError):
            solve_forward_cg1(linear_decay(), uniform_mesh(0.5, 8))

    def test_divergence_raises_sample_failure(self):
        with pytest.raises(SampleFailure):
            solve_forward_cg1(blow_up(), uniform_mesh(1.0, 4))


class TestRestrictMesh:
    def test_cut_at_existing_node(self):
        mesh = uniform_mesh(1.0, 4)
        out = restrict_mesh(mesh, 0.5)
        np.testing.assert_allclose(out.nodes, [0.0, 0.25, 0.5])

    def test_cut_inside_interval(self):
        mesh = uniform_mesh(1.0, 4)
        out = restrict_mesh(mesh, 0.6)
        np.testing.assert_allclose(out.nodes, [0.0, 0.25, 0.5, 0.6])

    def test_full_domain(self):
        mesh = uniform_mesh(1.0, 4)
        np.testing.assert_allclose(restrict_mesh(mesh, 1.0).nodes, mesh.nodes)

    def test_out_of_range(self):
        mesh = uniform_mesh(1.0, 4)
        with pytest.raises(MeshError):
            restrict_mesh(mesh, 1.5)
        with pytest.raises(MeshError):
            restrict_mesh(mesh, 0.0)


class TestAdjoint:
    def test_matches_expm_for_harmonic(self):
        """Adjoint of the oscillator vs the matrix-exponential oracle.

        For -phi' = A^T phi with constant A, phi(t) = expm(A^T (t* - t)) psi.
        """
        problem = harmonic_oscillator(50.0, 0.25)
        A = problem.jacobian(problem.initial, 0.0)
        psi = np.array([1.0, 0.0])
        t_star = 3.0
        errors = []
        for n in (16, 32, 64):
            forward = solve_forward_cg1(problem, uniform_mesh(3.0, n))
            phi = solve_adjoint(problem, forward, t_star, psi)
            exact = expm(A.T * t_star) @ psi  # value at t = 0
            errors.append(np.abs(phi.values[0] - exact).max())
        # overall observed order across the 16 -> 64 span
        order = 0.5 * np.log2(errors[0] / errors[-1])
        assert order > 1.8
        # absolute scale set by the O(1) sup of phi over the window
        assert errors[-1] < 1e-2

    def test_terminal_value_and_mesh(self):
        problem = harmonic_oscillator(50.0, 0.25)
        forward = solve_forward_cg1(problem, uniform_mesh(3.0, 27))
        phi = solve_adjoint(problem, forward, 2.0, np.array([0.0, 1.0]))
        np.testing.assert_allclose(phi.values[-1], [0.0, 1.0])
        assert phi.mesh.length == pytest.approx(2.0)
        # restricted forward mesh (18 intervals up to t=2) refined by 2
        assert phi.mesh.n_intervals == 36


class TestResidualPairing:
    def test_galerkin_orthogonality(self):
        """The cG(1) residual is orthogonal to piecewise-constant weights."""
        problem = harmonic_oscillator(50.0, 0.25)
        mesh = uniform_mesh(3.0, 27)
        forward = solve_forward_cg1(problem, mesh)
        rng = np.random.default_rng(3)
        weights = rng.standard_normal((mesh.n_intervals, problem.dim))

        def piecewise_constant(t):
            idx = np.clip(np.searchsorted(mesh.nodes, t, side="right") - 1,
                          0, mesh.n_intervals - 1)
            return weights[idx]

        phi = lambda t: piecewise_constant(np.asarray(t, dtype=float))
        from adaptive_mlmc.solvers import weighted_residual
        contributions = weighted_residual(problem, forward, phi, mesh, 3.0)
        scale = np.abs(forward.values).max() * np.abs(weights).max()
        assert np.abs(contributions).max() <= 1e-10 * scale

    def test_pairing_estimates_terminal_error(self):
        problem = harmonic_oscillator(50.0, 0.25)
        psi = np.array([1.0, 0.0])
        ref = solve_ivp(lambda t, y: problem.rhs(y, t), (0.0, 3.0),
                        problem.initial,
                        rtol=1e-12, atol=1e-12, dense_output=True)
        forward = solve_forward_cg1(problem, uniform_mesh(3.0, 108))
        phi = solve_adjoint(problem, forward, 3.0, psi)
        estimate = residual_pairing(problem, forward, phi, 3.0).sum()
        true_error = ref.sol(3.0) @ psi - forward.values[-1] @ psi
        assert estimate / true_error == pytest.approx(1.0, abs=0.1)

    def test_adjoint_must_cover_window(self):
        problem = harmonic_oscillator(50.0, 0.25)
        forward = solve_forward_cg1(problem, uniform_mesh(3.0, 27))
        phi = solve_adjoint(problem, forward, 1.0, np.array([1.0, 0.0]))
        with pytest.raises(MeshError):
            residual_pairing(problem, forward, phi, 2.0)
