"""Benchmark experiment presets and the ODE sample-evaluation adapter.

Each preset bundles a parameterized ODE, the distributions of its random
inputs, a quantity of interest, an initial uniform grid, and a default MSE
tolerance.  `OdeMlmcModel` adapts a preset to the driver interface: given a
parameter realization and a mesh it returns the QoI value and, on request,
the adjoint-based error decomposition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .error_estimation import (ErrorDecomposition, estimate_event_time_error,
                               estimate_standard_error)
from .meshes import TemporalMesh, uniform_mesh
from .models import OdeProblem, harmonic_oscillator, lorenz, two_body
from .qoi import (NonstandardQoi, StandardQoi, eval_event_time, eval_standard)
from .sampling import ParameterDistribution, normal, uniform
from .solvers import solve_forward_cg1


@dataclass(frozen=True)
class OdeExperiment:
    """A parameterized ODE together with its QoI and MLMC defaults."""

    name: str
    distributions: Tuple[ParameterDistribution, ...]
    make_problem: Callable
    qoi: object
    initial_intervals: int
    default_epsilon: float

    def initial_mesh(self) -> TemporalMesh:
        horizon = self.make_problem(
            np.array([0.5 * (d.a + d.b) for d in self.distributions])).horizon
        return uniform_mesh(horizon, self.initial_intervals, TemporalMesh)


class OdeMlmcModel:
    """Driver-facing adapter: solve, evaluate the QoI, optionally estimate."""

    def __init__(self, experiment: OdeExperiment):
        self.experiment = experiment
        self.distributions = experiment.distributions

    def evaluate(self, values: np.ndarray, mesh: TemporalMesh,
                 want_estimate: bool):
        problem = self.experiment.make_problem(values)
        forward = solve_forward_cg1(problem, mesh)
        q = self.experiment.qoi
        decomp: Optional[ErrorDecomposition] = None
        if isinstance(q, StandardQoi):
            value = eval_standard(forward, q)
            if want_estimate:
                decomp = estimate_standard_error(problem, forward, q)
        else:
            value = eval_event_time(forward, q)
            if want_estimate:
                decomp = estimate_event_time_error(problem, forward, q, value)
        return value, decomp


def _harmonic_standard() -> OdeExperiment:
    return OdeExperiment(
        name="harmonic-standard",
        distributions=(normal(50.0, 2.0, "k"), uniform(0.225, 0.275, "m")),
        make_problem=lambda w: harmonic_oscillator(w[0], w[1]),
        qoi=StandardQoi(np.array([1.0, 0.0]), 3.0),
        initial_intervals=27,
        default_epsilon=1e-3,
    )


def _harmonic_nonstandard() -> OdeExperiment:
    return OdeExperiment(
        name="harmonic-nonstandard",
        distributions=(normal(50.0, 1.0, "k"), uniform(0.235, 0.265, "m")),
        make_problem=lambda w: harmonic_oscillator(w[0], w[1]),
        qoi=NonstandardQoi(np.array([1.0, 0.0]), 0.0, occurrence=5),
        initial_intervals=18,
        default_epsilon=1e-5,
    )


def _lorenz() -> OdeExperiment:
    return OdeExperiment(
        name="lorenz",
        distributions=(uniform(0.0, 2.0, "theta"),),
        make_problem=lambda w: lorenz(w[0]),
        qoi=NonstandardQoi(np.array([1.0, 0.0, 0.0]), 3.0, occurrence=2),
        initial_intervals=24,
        default_epsilon=1e-4,
    )


def _two_body() -> OdeExperiment:
    return OdeExperiment(
        name="two-body",
        distributions=(uniform(1.97, 2.0, "theta"),),
        make_problem=lambda w: two_body(w[0]),
        qoi=NonstandardQoi(np.array([1.0, 0.0, 0.0, 0.0]), 0.0, occurrence=3),
        initial_intervals=40,
        default_epsilon=1e-3,
    )


_FACTORIES = {
    "harmonic-standard": _harmonic_standard,
    "harmonic-nonstandard": _harmonic_nonstandard,
    "lorenz": _lorenz,
    "two-body": _two_body,
}

EXPERIMENT_NAMES = tuple(sorted(_FACTORIES)) + ("advection-diffusion-1d",)


def get_experiment(name: str) -> OdeExperiment:
    """Look up an ODE experiment preset by name."""
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise KeyError(f"unknown experiment {name!r}; "
                       f"choose from {sorted(_FACTORIES)}") from None
