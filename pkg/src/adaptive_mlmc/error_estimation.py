"""Adjoint-based a posteriori error estimates for both QoI kinds.

The standard estimate pairs the forward residual with one adjoint solution.
The time-to-event estimate needs two adjoints (terminal values psi and
J(t_c)^T psi); the second supplies the linearization correction in the
denominator.  Remainder terms of the event-time linearization are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import OdeProblem, SampleFailure
from .qoi import NonstandardQoi, StandardQoi
from .solvers import AdjointPair, Trajectory, residual_pairing, solve_adjoint


class DegenerateDenominator(SampleFailure):
    """Grazing event: the event-time linearization denominator vanishes."""


@dataclass(frozen=True)
class ErrorDecomposition:
    """Signed per-interval error contributions and their scaled total.

    `total` is sum(contributions) / denominator; the denominator is 1 for
    standard QoIs and the event-time linearization scalar otherwise.
    """

    contributions: np.ndarray
    denominator: float = 1.0
    kind: str = "standard"

    def __post_init__(self):
        contributions = np.ascontiguousarray(self.contributions, dtype=float)
        contributions.setflags(write=False)
        object.__setattr__(self, "contributions", contributions)
        if self.kind not in ("standard", "nonstandard"):
            raise ValueError(f"unknown decomposition kind {self.kind!r}")
        if self.kind == "nonstandard" and self.denominator == 0.0:
            raise ValueError("nonstandard decomposition needs a nonzero denominator")

    @property
    def total(self) -> float:
        return float(self.contributions.sum() / self.denominator)


@dataclass(frozen=True)
class AccumulatedError:
    """Running absolute partial sums E_k = |sum_{i<=k} e_i|."""

    E: np.ndarray

    def __post_init__(self):
        E = np.ascontiguousarray(self.E, dtype=float)
        E.setflags(write=False)
        object.__setattr__(self, "E", E)


def accumulate(decomp: ErrorDecomposition) -> AccumulatedError:
    """Accumulated error profile of the raw (unscaled) contributions."""
    return AccumulatedError(np.abs(np.cumsum(decomp.contributions)))


def estimate_standard_error(problem: OdeProblem, forward: Trajectory,
                            q: StandardQoi) -> ErrorDecomposition:
    """Estimate Q(u) - Q(U) with one adjoint solve, decomposed per interval."""
    phi = solve_adjoint(problem, forward, q.t_star, q.psi)
    contributions = residual_pairing(problem, forward, phi, q.t_star)
    return ErrorDecomposition(contributions, 1.0, "standard")


def event_time_adjoints(problem: OdeProblem, forward: Trajectory,
                        q: NonstandardQoi, t_c: float) -> AdjointPair:
    """The two adjoint solves the event-time estimate requires."""
    u_c = forward(t_c)
    psi2 = problem.jacobian(u_c, t_c).T @ q.psi
    return AdjointPair(solve_adjoint(problem, forward, t_c, q.psi),
                       solve_adjoint(problem, forward, t_c, psi2))


def estimate_event_time_error(problem: OdeProblem, forward: Trajectory,
                              q: NonstandardQoi, t_c: float) -> ErrorDecomposition:
    """Linearized event-time error estimate around the computed crossing t_c.

    Numerator contributions estimate e(t_c) . psi; the denominator is
    f(U(t_c), t_c) . psi plus the estimated e(t_c) . J(t_c)^T psi, with the
    Jacobian frozen at (U(t_c), t_c).
    """
    pair = event_time_adjoints(problem, forward, q, t_c)
    contributions = residual_pairing(problem, forward, pair.phi1, t_c)
    correction = float(residual_pairing(problem, forward, pair.phi2, t_c).sum())
    u_c = forward(t_c)
    f_psi = float(problem.rhs(u_c, t_c) @ q.psi)
    denominator = f_psi + correction
    if abs(denominator) < 1e-10 * (1.0 + abs(f_psi)):
        raise DegenerateDenominator(
            f"event-time denominator {denominator} vanishes at t_c={t_c}")
    return ErrorDecomposition(contributions, denominator, "nonstandard")
