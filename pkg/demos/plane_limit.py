"""Shrinking the grid step with every vertex carrying a delta.

When V is the whole lattice the rescaled grid energies at mass 2 mu / eps
approach the level of the planar problem with a doubled p-coefficient
(alpha = 1/2 on the grid).  This runs a quick, coarse version of the sweep:
the reference raster is h = 0.125 and the grid window is 8 wide, so the
numbers are rougher than the test suite's, but the trend is already visible.
"""
from gridnls import periodic as ps
from gridnls.harness import sweep_epsilon
from gridnls.planar import PLANE, LimitCase

z2 = ps.VertexSetSpec.z2_periodic([(0, 0)], (1, 0), (0, 1))
sweep = sweep_epsilon(LimitCase(PLANE), z2, 2.5, 2.5, 1.0, [0.5, 0.25], m=1, half_width=8.0,
                      ref_h=0.125, ref_half_width=12.0)

ref = sweep.reference
print(f"planar level {ref.energy:.7f} (rasters {ref.energy_coarse:.7f}, {ref.energy_fine:.7f})")
print(f"{'eps':>6} {'beta':>6} {'eps*E':>12} {'gap':>10} {'H1 dist':>9} {'steps':>6}")
for row in sweep.rows:
    print(f"{row.epsilon:6.3f} {row.beta_used:6.3f} {row.scaled_energy:12.7f} {row.energy_gap:10.2e} "
          f"{row.h1_distance_aligned:9.4f} {row.iterations:6d}")
trend = sweep.trend()
print("gaps shrink:", trend["gaps_decreasing"], " distances shrink:", trend["h1_decreasing"])
