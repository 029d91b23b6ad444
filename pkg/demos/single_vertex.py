"""A ground state pinned at one vertex, and the mass threshold for large p.

With a single delta vertex at the origin and p = q = 2.5 every mass gives a
negative level.  Raising p to 5 keeps the vertex term alone in charge of small
masses, which is not enough: the level stays zero until the mass passes a
threshold, which the bisection brackets.
"""
import numpy as np

from gridnls import periodic as ps
from gridnls.energy import EnergyParams, GridProblem, el_residual
from gridnls.flow import SolveConfig, minimize
from gridnls.grid import GridSpec, build_grid
from gridnls.harness import find_threshold, gaussian_field

origin = ps.VertexSetSpec.finite([(0, 0)])

grid = build_grid(GridSpec(epsilon=1.0, window=16, m=2))
params = EnergyParams(p=2.5, q=2.5, alpha=1.0, beta=1.0, mu=1.0)
prob = GridProblem(grid, params, ps.materialize(origin, grid))
res = minimize(prob, 1.0, prob.from_field(gaussian_field(grid, width=3.0)), SolveConfig(grad_tol=1e-10))

u = res.field.vertex_array()
W = grid.window
print(f"p = q = 2.5, mass 1: energy {res.energy:.6f}, lambda {res.lam:.6f}, {res.iterations} steps")
print(f"  peak {u[W, W]:.4f} at the delta vertex; neighbours {u[W + 1, W]:.4f}, {u[W + 2, W]:.4f}")
r = el_residual(res.field, params, prob.vertices, res.lam)
print("  Euler-Lagrange residuals:", {k: f"{v:.2e}" for k, v in r.as_dict().items()})

print("\np = 5, q = 2.5: bisecting on the mass")
rep = find_threshold(5.0, 2.5, origin, 1.0, (1e-3, 1e2), iters=6, window=16)
for pr in sorted(rep.probes, key=lambda pr: pr.mu):
    print(f"  mu = {pr.mu:9.4g}  {pr.sign:8s} best energy {pr.energy: .3e}")
print(f"threshold between {rep.mu_lo:.4g} and {rep.mu_hi:.4g}")
