"""Goal-oriented adaptivity for a stationary advection-diffusion problem.

Solves -u'' + b u' = f on an interval with homogeneous Dirichlet data, a
localized source, and a random advection speed b.  The quantity of
interest is the average of u over a subinterval.  The demo first shows the
single-sample DWR loop (estimate, mark, refine), then runs the full MLMC
estimator with DWR and uniform new-level meshes and compares the modeled
costs.
"""
import numpy as np

from adaptive_mlmc import (BvpMlmcModel, BvpProblem, MlmcRunConfig,
                           SpatialMesh1D, refine_intervals, run_bvp_mlmc,
                           solve_bvp_adjoint, solve_bvp_p1, uniform_mesh)
from adaptive_mlmc.refinement import dwr_select
from adaptive_mlmc.stationary import (BVP_DEFAULT_EPSILON,
                                      bvp_error_decomposition,
                                      bvp_initial_mesh, bvp_refinement,
                                      qoi_value)

ADVECTION = 14.0


def main():
    problem = BvpProblem()
    print(f"single-sample DWR loop at b = {ADVECTION:g}")
    mesh = uniform_mesh(3.0, 12, SpatialMesh1D)
    for sweep in range(4):
        u = solve_bvp_p1(problem, ADVECTION, mesh)
        phi = solve_bvp_adjoint(problem, ADVECTION, mesh)
        decomp = bvp_error_decomposition(problem, ADVECTION, u, phi)
        print(f"  sweep {sweep}: {mesh.n_intervals:3d} elements, "
              f"QoI = {qoi_value(problem, u):+.6f}, "
              f"estimated error = {decomp.total:+.3e}")
        marked = dwr_select(decomp, 0.25)
        mesh = refine_intervals(mesh, marked, 2)

    print(f"\nMLMC over random b, epsilon = {BVP_DEFAULT_EPSILON:g}")
    model = BvpMlmcModel()
    for strategy in ("dwr", "uniform"):
        cfg = MlmcRunConfig(epsilon=BVP_DEFAULT_EPSILON,
                            initial_mesh=bvp_initial_mesh(),
                            refinement=bvp_refinement(strategy),
                            master_seed=0)
        est = run_bvp_mlmc(cfg, model)
        elems = [lv.elems for lv in est.levels]
        print(f"  {strategy:8s}: estimate = {est.value:+.5f}, "
              f"levels = {elems}, modeled cost = {est.total_cost:.1f}")
    print("\nDWR reaches the bias tolerance with a smaller fine-level mesh, "
          "so its per-sample cost (and total cost) is lower")


if __name__ == "__main__":
    main()
