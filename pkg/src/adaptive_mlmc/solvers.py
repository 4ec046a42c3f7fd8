"""Continuous piecewise-linear Galerkin ODE solvers and residual pairing.

The forward solver enforces, per interval, the nodal update
U_{n+1} - U_n = int f(U(t), t) dt with U linear on the interval, via Newton
iteration.  The adjoint solver integrates the linearized problem backwards
from a terminal value on the forward mesh restricted to (0, t*) and
uniformly refined by 2.  All integrals use 5-point Gauss-Legendre per finest
sub-interval, exact for the polynomial degrees that arise here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshes import Mesh1D, MeshError, TemporalMesh, uniform_refine, REL_TOL
from .models import OdeProblem, SampleFailure

NEWTON_TOL = 1e-12
NEWTON_MAX_ITERS = 25
ADJOINT_REFINE_FACTOR = 2

# 5-point Gauss-Legendre rule on [-1, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


def gauss_points(a: float, b: float):
    """Nodes and weights of the 5-point Gauss-Legendre rule on [a, b]."""
    half = 0.5 * (b - a)
    return a + half * (_GL_X + 1.0), half * _GL_W


@dataclass(frozen=True)
class Trajectory:
    """Continuous piecewise-linear function on a mesh: one value per node."""

    mesh: Mesh1D
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != self.mesh.nodes.size:
            raise ValueError("need one value per mesh node")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __call__(self, t):
        """Linear interpolation; t scalar -> (d,), t of shape (m,) -> (m, d)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        nodes = self.mesh.nodes
        idx = np.clip(np.searchsorted(nodes, t_arr, side="right") - 1,
                      0, self.mesh.n_intervals - 1)
        h = nodes[idx + 1] - nodes[idx]
        s = (t_arr - nodes[idx]) / h
        out = (1.0 - s)[:, None] * self.values[idx] + s[:, None] * self.values[idx + 1]
        return out[0] if np.isscalar(t) or np.ndim(t) == 0 else out

    def slope(self, interval: int) -> np.ndarray:
        h = self.mesh.nodes[interval + 1] - self.mesh.nodes[interval]
        return (self.values[interval + 1] - self.values[interval]) / h


@dataclass(frozen=True)
class AdjointPair:
    """The one or two adjoint solutions an error estimate needs."""

    phi1: Trajectory
    phi2: Trajectory | None = None


def solve_forward_cg1(problem: OdeProblem, mesh: TemporalMesh) -> Trajectory:
    """March the cG(1) method over the mesh, Newton-solving each nodal update."""
    if mesh.length < problem.horizon * (1.0 - REL_TOL):
        raise MeshError("mesh does not cover the problem horizon")
    nodes = mesh.nodes
    d = problem.dim
    eye = np.eye(d)
    U = np.empty((nodes.size, d))
    U[0] = problem.initial
    for n in range(mesh.n_intervals):
        a, b = nodes[n], nodes[n + 1]
        h = b - a
        tq, wq = gauss_points(a, b)
        sq = (tq - a) / h
        Un = U[n]
        X = Un + h * problem.rhs(Un, a)
        converged = False
        for _ in range(NEWTON_MAX_ITERS):
            if not np.all(np.isfinite(X)):
                raise SampleFailure(f"forward solve diverged on interval {n}")
            Uq = np.outer(1.0 - sq, Un) + np.outer(sq, X)
            residual = X - Un - wq @ problem.rhs(Uq, tq)
            if np.max(np.abs(residual)) <= NEWTON_TOL:
                converged = True
                break
            J = eye - np.einsum("q,qij->ij", wq * sq, problem.jacobian(Uq, tq))
            try:
                X = X - np.linalg.solve(J, residual)
            except np.linalg.LinAlgError as exc:
                raise SampleFailure(f"singular Newton system on interval {n}") from exc
        if not converged:
            raise SampleFailure(
                f"Newton did not reach {NEWTON_TOL} in {NEWTON_MAX_ITERS} "
                f"iterations on interval {n}")
        U[n + 1] = X
    return Trajectory(mesh, U)


def restrict_mesh(mesh: Mesh1D, t_star: float) -> Mesh1D:
    """Nodes of `mesh` strictly before t_star, then t_star itself."""
    T = mesh.length
    if not (0.0 < t_star <= T * (1.0 + REL_TOL)):
        raise MeshError(f"t*={t_star} outside (0, {T}]")
    t_star = min(t_star, T)
    cut = np.searchsorted(mesh.nodes, t_star * (1.0 - REL_TOL) - REL_TOL, side="left")
    nodes = np.append(mesh.nodes[:cut], t_star)
    return type(mesh)(nodes)


def solve_adjoint(problem: OdeProblem, forward: Trajectory, t_star: float,
                  terminal_value: np.ndarray) -> Trajectory:
    """Integrate -phi' = J(t)^T phi backwards from phi(t*) = terminal_value.

    J is the model Jacobian evaluated on the forward interpolant.  The
    adjoint mesh is the forward mesh restricted to (0, t*) and uniformly
    refined by 2; each backward step is a single linear solve.
    """
    mesh = uniform_refine(restrict_mesh(forward.mesh, t_star), ADJOINT_REFINE_FACTOR)
    nodes = mesh.nodes
    d = problem.dim
    eye = np.eye(d)
    phi = np.empty((nodes.size, d))
    phi[-1] = np.asarray(terminal_value, dtype=float)
    for n in range(mesh.n_intervals - 1, -1, -1):
        a, b = nodes[n], nodes[n + 1]
        tq, wq = gauss_points(a, b)
        sq = (tq - a) / (b - a)
        Jt = np.swapaxes(problem.jacobian(forward(tq), tq), -1, -2)
        M0 = np.einsum("q,qij->ij", wq * (1.0 - sq), Jt)
        M1 = np.einsum("q,qij->ij", wq * sq, Jt)
        # cG(1) for -phi' = J^T phi: (I - M0) phi_a = (I + M1) phi_b
        phi[n] = np.linalg.solve(eye - M0, phi[n + 1] + M1 @ phi[n + 1])
    return Trajectory(mesh, phi)


def _forward_slopes_at(forward: Trajectory, t: np.ndarray) -> np.ndarray:
    nodes = forward.mesh.nodes
    idx = np.clip(np.searchsorted(nodes, t, side="right") - 1,
                  0, forward.mesh.n_intervals - 1)
    h = (nodes[idx + 1] - nodes[idx])[:, None]
    return (forward.values[idx + 1] - forward.values[idx]) / h


def weighted_residual(problem: OdeProblem, forward: Trajectory, phi,
                      quad_mesh: Mesh1D, t_star: float) -> np.ndarray:
    """Per-forward-interval integrals of [f(U) - dU/dt] . phi over (0, t*).

    `phi` is any callable t -> weight values of shape (m, d); the integral is
    assembled with 5-point Gauss-Legendre per `quad_mesh` sub-interval and
    summed back onto the intervals of the forward mesh restricted to (0, t*).
    """
    restricted = restrict_mesh(forward.mesh, t_star)
    contributions = np.zeros(restricted.n_intervals)
    for k in range(quad_mesh.n_intervals):
        a, b = quad_mesh.nodes[k], quad_mesh.nodes[k + 1]
        tq, wq = gauss_points(a, b)
        Uq = forward(tq)
        integrand = np.einsum("qi,qi->q",
                              problem.rhs(Uq, tq) - _forward_slopes_at(forward, tq),
                              np.asarray(phi(tq), dtype=float))
        contributions[restricted.interval_of(0.5 * (a + b))] += wq @ integrand
    return contributions


def residual_pairing(problem: OdeProblem, forward: Trajectory,
                     adjoint: Trajectory, t_star: float) -> np.ndarray:
    """Adjoint-weighted residual contributions indexed on the forward mesh."""
    if adjoint.mesh.length < t_star * (1.0 - REL_TOL):
        raise MeshError("adjoint trajectory does not cover (0, t*)")
    return weighted_residual(problem, forward, adjoint, adjoint.mesh, t_star)
