"""Reproducible random-parameter sampling on counter-based streams.

Every sample is a pure function of (master_seed, level, index): the stream is
keyed by all three, uniforms come from inverse-CDF on 64-bit words and
normals from Box-Muller on the same stream.  Results are therefore identical
no matter in which order, or on how many workers, samples are generated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

_INV_2_53 = 2.0 ** -53


class DistributionError(ValueError):
    """Invalid distribution parameters."""


@dataclass(frozen=True)
class ParameterDistribution:
    """A scalar random input: uniform(a, b) or normal(mean, stddev)."""

    kind: str
    a: float
    b: float
    target: str = ""

    def __post_init__(self):
        if self.kind == "uniform":
            if not self.a < self.b:
                raise DistributionError("uniform needs a < b")
        elif self.kind == "normal":
            if not self.b > 0:
                raise DistributionError("normal needs stddev > 0")
        else:
            raise DistributionError(f"unknown distribution kind {self.kind!r}")


def uniform(low: float, high: float, target: str = "") -> ParameterDistribution:
    return ParameterDistribution("uniform", float(low), float(high), target)


def normal(mean: float, stddev: float, target: str = "") -> ParameterDistribution:
    return ParameterDistribution("normal", float(mean), float(stddev), target)


@dataclass(frozen=True)
class ParameterSample:
    """One realization of all random inputs, tagged with its stream identity."""

    values: np.ndarray
    sample_id: Tuple[int, int]
    seed_path: Tuple[int, int, int]

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _words(master_seed: int, level: int, index: int, n: int) -> np.ndarray:
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=(int(level), int(index)))
    gen = np.random.Generator(np.random.Philox(seed=seq))
    return gen.integers(0, 2 ** 64, size=n, dtype=np.uint64)


def _unit_open_closed(words: np.ndarray) -> np.ndarray:
    """Map 64-bit words to (0, 1]."""
    return ((words >> np.uint64(11)).astype(float) + 1.0) * _INV_2_53


def sample_parameters(spec: Sequence[ParameterDistribution], master_seed: int,
                      level: int, index: int) -> ParameterSample:
    """Draw one value per distribution, deterministically in (seed, level, index)."""
    n_words = sum(2 if d.kind == "normal" else 1 for d in spec)
    u = _unit_open_closed(_words(master_seed, level, index, n_words))
    values = np.empty(len(spec))
    pos = 0
    for k, dist in enumerate(spec):
        if dist.kind == "uniform":
            values[k] = dist.a + (dist.b - dist.a) * u[pos]
            pos += 1
        else:
            u1, u2 = u[pos], u[pos + 1]
            z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
            values[k] = dist.a + dist.b * z
            pos += 2
    return ParameterSample(values, (int(level), int(index)),
                           (int(master_seed), int(level), int(index)))
