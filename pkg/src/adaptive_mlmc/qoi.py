"""Quantities of interest: terminal-time functionals and time-to-event."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meshes import MeshError, REL_TOL
from .models import SampleFailure
from .solvers import Trajectory


class EventNotFound(SampleFailure):
    """The requested occurrence of the event does not happen in (0, T]."""


@dataclass(frozen=True)
class StandardQoi:
    """Q(u) = u(t_star) . psi."""

    psi: np.ndarray
    t_star: float

    def __post_init__(self):
        psi = np.ascontiguousarray(self.psi, dtype=float)
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        if not self.t_star > 0:
            raise ValueError("t_star must be positive")


@dataclass(frozen=True)
class NonstandardQoi:
    """Q(u) = time of the k-th crossing of u(t) . psi through `threshold`."""

    psi: np.ndarray
    threshold: float
    occurrence: int = 1

    def __post_init__(self):
        psi = np.ascontiguousarray(self.psi, dtype=float)
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)
        if self.occurrence < 1:
            raise ValueError("occurrence must be >= 1")


def eval_standard(traj: Trajectory, q: StandardQoi) -> float:
    if q.t_star > traj.mesh.length * (1.0 + REL_TOL):
        raise MeshError("t_star beyond the trajectory mesh")
    return float(traj(min(q.t_star, traj.mesh.length)) @ q.psi)


def event_times(traj: Trajectory, q: NonstandardQoi) -> np.ndarray:
    """All crossing times of U(t) . psi = threshold in (0, T], sorted.

    U . psi is piecewise linear, so each sign change yields one closed-form
    root; exact zeros at nodes count once.  Tangential touches inside an
    interval are invisible to the sign check.
    """
    nodes = traj.mesh.nodes
    g = traj.values @ q.psi - q.threshold
    times = [float(t) for t, gv in zip(nodes, g) if gv == 0.0 and t > 0.0]
    for i in range(traj.mesh.n_intervals):
        if g[i] * g[i + 1] < 0.0:
            h = nodes[i + 1] - nodes[i]
            times.append(float(nodes[i] + h * g[i] / (g[i] - g[i + 1])))
    return np.sort(np.array(times))


def eval_event_time(traj: Trajectory, q: NonstandardQoi) -> float:
    """Time of the k-th crossing; raises EventNotFound if there are fewer."""
    times = event_times(traj, q)
    if times.size < q.occurrence:
        raise EventNotFound(
            f"only {times.size} crossings of threshold {q.threshold} in (0, "
            f"{traj.mesh.length}]; occurrence {q.occurrence} requested")
    return float(times[q.occurrence - 1])
