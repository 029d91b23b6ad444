"""Numerical signs of the level against the analytic rule, one vertex.

For a finite vertex set the level is negative for every mass when p < 4.
Above that, small masses give zero and large ones give a negative level, and
the rule has nothing to say in between; those cells are printed but not
scored.

Expect the p = 3.5 cells at small and moderate mass to disagree.  The rule is
right, but the negative states there are extremely spread out: at mass 1 the
probe reports Zero on windows of half-width 24 and 48 and only finds a level
of about -1.3e-8 at half-width 96.  A 12-wide window cannot hold them.
"""
from gridnls import periodic as ps
from gridnls.harness import phase_table

origin = ps.VertexSetSpec.finite([(0, 0)])
cells = phase_table(origin, [2.5, 3.5, 5.0], [2.5, 3.5], [1e-3, 1.0, 100.0], window=12)

print(f"{'p':>4} {'q':>4} {'mu':>7}  {'numeric':9} {'rule':13} energy")
for c in cells:
    flag = "  <-- mismatch" if c.mismatch else ""
    print(f"{c.p:4} {c.q:4} {c.mu:7g}  {c.numeric:9} {c.analytic:13} {c.energy: .2e}{flag}")
print(f"{sum(c.mismatch for c in cells)} mismatches among determinate cells")
