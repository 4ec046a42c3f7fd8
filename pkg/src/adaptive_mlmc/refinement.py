"""New-level mesh creation: uniform, multi-sample DWR, and meso-scale.

DWR selects, per sample, the intervals carrying the largest absolute error
contributions and refines the union of all selections.  Meso-scale
refinement partitions the domain at the minima of the accumulated error of
the single worst sample, allocates intervals to equalize region errors, and
merges with the previous level so no region is ever unrefined.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .error_estimation import AccumulatedError, ErrorDecomposition, accumulate
from .meshes import (IntervalSet, Mesh1D, MeshError, MesoRegion, RegionSpan,
                     check_region_tiling, common_mesoregion_refinement,
                     mesh_from_region_spans, refine_intervals, region_spans,
                     uniform_refine)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RefinementConfig:
    strategy: str = "uniform"
    dwr_fraction: float = 0.5
    dwr_factor: int = 3
    uniform_factor: int = 2
    meso_q: float = 2.0
    meso_target_multiplier: float = 2.0

    def __post_init__(self):
        if self.strategy not in ("uniform", "dwr", "meso"):
            raise ValueError(f"unknown refinement strategy {self.strategy!r}")
        if not 0.0 < self.dwr_fraction <= 1.0:
            raise ValueError("dwr_fraction must be in (0, 1]")
        if self.dwr_factor < 2 or self.uniform_factor < 2:
            raise ValueError("refinement factors must be >= 2")
        if not self.meso_q > 0:
            raise ValueError("meso_q must be positive")
        if not self.meso_target_multiplier > 1:
            raise ValueError("meso_target_multiplier must exceed 1")


def refine_uniform(mesh: Mesh1D, cfg: RefinementConfig) -> Mesh1D:
    return uniform_refine(mesh, cfg.uniform_factor)


def dwr_select(decomp: ErrorDecomposition, fraction: float) -> IntervalSet:
    """Indices of the ceil(fraction * N) largest |contribution|s.

    Ties break toward the lower index so the selection is deterministic.
    """
    mags = np.abs(decomp.contributions)
    if mags.size == 0:
        raise ValueError("empty decomposition")
    n_pick = math.ceil(fraction * mags.size)
    order = sorted(range(mags.size), key=lambda i: (-mags[i], i))
    return IntervalSet(frozenset(order[:n_pick]))


def refine_dwr_multisample(mesh: Mesh1D, decomps: Sequence[ErrorDecomposition],
                           cfg: RefinementConfig) -> Mesh1D:
    """Refine the union of every sample's selected intervals."""
    if not decomps:
        raise ValueError("need at least one decomposition")
    union = frozenset()
    for d in decomps:
        if d.contributions.size > mesh.n_intervals:
            raise MeshError("decomposition not indexed on this mesh")
        union = union | dwr_select(d, cfg.dwr_fraction).indices
    return refine_intervals(mesh, IntervalSet(union), cfg.dwr_factor)


def find_meso_regions(acc: AccumulatedError) -> list:
    """Split intervals at the minima of the accumulated error.

    From the current start, skip the initial strictly increasing run of E,
    then end the region at the global minimizer of E over the remaining
    indices; repeat from there.  Each region records the error accumulated
    across it (E at its end minus E at the previous region's end).
    """
    E = acc.E
    n = E.size
    if n == 0:
        raise ValueError("empty accumulated-error profile")
    regions = []
    start = 0
    prev_end_value = 0.0
    while start < n:
        j = start
        while j + 1 < n and E[j + 1] > E[j]:
            j += 1
        if j + 1 >= n:
            end = n - 1
        else:
            end = j + 1 + int(np.argmin(E[j + 1:]))
        regions.append(MesoRegion(start, end, float(E[end] - prev_end_value)))
        prev_end_value = float(E[end])
        start = end + 1
    check_region_tiling(regions, n)
    return regions


def allocate_meso(regions: Sequence[MesoRegion], n_hat: int, q: float) -> list:
    """Interval counts per region minimizing total error for a fixed budget.

    Solves c_i / N_i^(q+1) = K with c_i = |E_i| * Ntilde_i^q; counts are
    rounded half-up (clamped to >= 1) and the largest region absorbs the
    rounding residual.  Regions with zero accumulated error keep their
    current density; if every region is degenerate, fall back to uniform
    doubling.
    """
    if n_hat < len(regions):
        raise ValueError("budget smaller than the region count")
    c = np.array([abs(r.accumulated_error) * r.interval_count ** q for r in regions])
    if np.all(c == 0.0):
        log.warning("all meso-region errors vanish; falling back to uniform doubling")
        return [2 * r.interval_count for r in regions]
    p = 1.0 / (q + 1.0)
    k_root = c ** p
    # K = [(1/n_hat) * sum c_i^(1/(q+1))]^(q+1); raw counts sum to n_hat exactly
    raw = n_hat * k_root / k_root.sum()
    counts = [max(1, math.floor(r + 0.5)) if c[i] > 0 else regions[i].interval_count
              for i, r in enumerate(raw)]
    allocated = [i for i in range(len(regions)) if c[i] > 0]
    residual = n_hat - sum(counts[i] for i in allocated)
    biggest = max(allocated, key=lambda i: counts[i])
    counts[biggest] = max(1, counts[biggest] + residual)
    return counts


def refine_meso(prev_mesh: Mesh1D, prev_regions: Sequence[RegionSpan],
                worst_decomp: ErrorDecomposition, cfg: RefinementConfig):
    """Build the next level's mesh from the worst sample's error profile.

    Returns (mesh, region spans); the spans are what the following level
    merges against.  Contributions shorter than the mesh (event-time QoIs
    stop at t_c) are padded with zeros so regions tile the whole domain.
    """
    n_prev = prev_mesh.n_intervals
    contributions = worst_decomp.contributions
    if contributions.size > n_prev:
        raise MeshError("decomposition not indexed on the previous mesh")
    padded = np.zeros(n_prev)
    padded[:contributions.size] = contributions
    acc = AccumulatedError(np.abs(np.cumsum(padded)))
    regions = find_meso_regions(acc)
    n_hat = math.ceil(cfg.meso_target_multiplier * n_prev)
    counts = allocate_meso(regions, n_hat, cfg.meso_q)
    tentative = [RegionSpan(float(prev_mesh.nodes[r.start_interval]),
                            float(prev_mesh.nodes[r.end_interval + 1]), counts[i])
                 for i, r in enumerate(regions)]
    merged = common_mesoregion_refinement(prev_regions, tentative)
    mesh = mesh_from_region_spans(merged, cls=type(prev_mesh))
    return mesh, merged


def build_next_mesh(prev_mesh: Mesh1D, prev_regions, decomps, cfg: RefinementConfig):
    """Dispatch on the configured strategy; returns (mesh, regions-or-None)."""
    if cfg.strategy == "uniform":
        return refine_uniform(prev_mesh, cfg), None
    if cfg.strategy == "dwr":
        return refine_dwr_multisample(prev_mesh, decomps, cfg), None
    worst = max(decomps, key=lambda d: abs(d.total))
    return refine_meso(prev_mesh, prev_regions, worst, cfg)
