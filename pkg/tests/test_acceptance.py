"""The twelve acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``criterion k: PASS|FAIL`` line (repeated in the
terminal summary) before asserting.
"""
from math import pi

import numpy as np
import pytest
from scipy.linalg import eigh

from gridnls import periodic as ps
from gridnls.energy import EnergyParams, GridProblem, el_residual
from gridnls.extension import AffineExtension, evaluate
from gridnls.fields import restrict_profile
from gridnls.flow import NEGATIVE, ZERO, SolveConfig, minimize
from gridnls.grid import GridSpec, build_grid
from gridnls.harness import concavity_check, find_threshold, gaussian_field, probe_sign, sweep_epsilon
from gridnls.planar import LINE, PLANE, STRIP, LimitCase, jump_residual, planar_ground_state, rotate_field
from gridnls.properties import (
    check_gradient, extension_grad_ratios, random_field, trace_ratio_bound, trace_ratios,
    vertex_sum_discrepancy,
)

ORIGIN = ps.VertexSetSpec.finite([(0, 0)])
ZX = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0))
ZY = ps.VertexSetSpec.z_periodic([(0, 0)], (0, 1))
Z2 = ps.VertexSetSpec.z2_periodic([(0, 0)], (1, 0), (0, 1))
EPS = [0.5, 0.25, 0.125]


def _problem(p, q, mu=1.0, alpha=1.0, beta=1.0, W=8, m=2, eps=1.0, vspec=ORIGIN):
    g = build_grid(GridSpec(eps, W, m))
    return GridProblem(g, EnergyParams(p, q, alpha, beta, mu), ps.materialize(vspec, g))


def test_criterion_01_gradient(report):
    row = check_gradient(np.random.default_rng(1), n=100, tol=1e-6)
    assert report(1, row.passed, f"worst relative mismatch {row.worst:.2e} over 100 pairs (< 1e-6)")


def test_criterion_02_mass_and_monotonicity(report):
    prob = _problem(2.5, 2.5, W=10)
    x0 = prob.from_field(gaussian_field(prob.grid, (1.0, -2.0), 2.0))
    res = minimize(prob, 1.0, x0, SolveConfig(grad_tol=1e-9), record=True)
    drops = np.diff(res.energies)
    ok = res.converged and bool(np.all(drops < 0)) and max(res.mass_errors) < 1e-12
    assert report(2, ok, f"{res.iterations} steps, max energy change {drops.max():.1e}, "
                         f"max mass error {max(res.mass_errors):.1e}")


def test_criterion_03_linear_oracle(report):
    prob = _problem(2.5, 2.5, alpha=0.0, beta=0.0, W=3, m=2)
    first = eigh(prob.stiffness.toarray(), np.diag(prob.weights), eigvals_only=True)[0]
    res = minimize(prob, 1.0, prob.from_field(gaussian_field(prob.grid, width=1.5)),
                   SolveConfig(grad_tol=1e-10))
    err = abs(res.lam + first)
    assert report(3, res.converged and err < 1e-8, f"|lambda + eigenvalue| = {err:.1e} (< 1e-8)")


@pytest.mark.slow
def test_criterion_04_el_residuals_halve(report):
    kir, dlt = [], []
    for m in (2, 4, 8):
        prob = _problem(2.5, 2.5, W=12, m=m)
        res = minimize(prob, 1.0, prob.from_field(gaussian_field(prob.grid, width=2.0)),
                       SolveConfig(grad_tol=1e-10))
        assert res.converged
        r = el_residual(res.field, prob.params, prob.vertices, res.lam)
        kir.append(r.kirchhoff_residual)
        dlt.append(r.delta_residual)
    ratios = [b / a for seq in (kir, dlt) for a, b in zip(seq, seq[1:])]
    ok = all(0.35 <= r <= 0.65 for r in ratios)
    assert report(4, ok, "ratios kirchhoff/delta " + ", ".join(f"{r:.3f}" for r in ratios) + " in [0.35, 0.65]")


@pytest.mark.slow
def test_criterion_05_theorem_1_2(report):
    a = {mu: probe_sign(2.5, 2.5, ORIGIN, 1.0, mu) for mu in (0.1, 1.0, 10.0)}
    ok_a = all(pr.sign == NEGATIVE and pr.energy < -1e-8 for pr in a.values())
    rep = find_threshold(5.0, 2.5, ORIGIN, 1.0, (1e-3, 1e2), iters=4)
    signs = {pr.mu: pr.sign for pr in rep.probes}
    ok_b = rep.straddles and signs[1e-3] == ZERO and signs[1e2] == NEGATIVE
    levels = ", ".join(f"{pr.energy:.3g}" for pr in a.values())
    assert report(5, ok_a and ok_b, f"(a) levels {levels}; (b) threshold in [{rep.mu_lo:.3g}, {rep.mu_hi:.3g}]")


@pytest.mark.slow
def test_criterion_06_theorems_1_3_1_4(report):
    zline_low = probe_sign(5.0, 2.5, ZX, 1.0, 1e-2)
    zline_q_low = probe_sign(5.0, 3.5, ZX, 1.0, 1e-3)
    zline_q_high = probe_sign(5.0, 3.5, ZX, 1.0, 1e2)
    z2_low = probe_sign(5.0, 3.5, Z2, 1.0, 1e-2)
    parts = {
        "Z p5 q2.5 mu1e-2 Negative": zline_low.sign == NEGATIVE,
        "Z p5 q3.5 mu1e-3 Zero": zline_q_low.sign == ZERO,
        "Z p5 q3.5 mu1e2 Negative": zline_q_high.sign == NEGATIVE,
        "Z2 p5 q3.5 mu1e-2 Negative": z2_low.sign == NEGATIVE,
    }
    detail = "; ".join(f"{k}: {'ok' if v else 'no'}" for k, v in parts.items())
    detail += f" (levels {zline_low.energy:.2e}, {z2_low.energy:.2e})"
    assert report(6, all(parts.values()), detail)


@pytest.mark.slow
def test_criterion_07_concavity(report):
    rep = concavity_check(ORIGIN, 2.5, 2.5, 1.0, [0.5, 1.0, 1.5, 2.0], tol=1e-6, pos_tol=1e-10)
    ok = rep.concave and rep.nonpositive
    assert report(7, ok, f"levels {', '.join(f'{E:.5f}' for E in rep.levels)}; "
                         f"worst chord excess {rep.worst_violation:.1e}")


def test_criterion_08_extension(report):
    rng = np.random.default_rng(8)
    g = build_grid(GridSpec(0.5, 6, 2))
    u = random_field(g, rng)
    ext = AffineExtension.from_field(u)
    k = np.arange(-6, 7) * 0.5
    X, Y = np.meshgrid(k, k, indexing="ij")
    coincide = bool(np.array_equal(evaluate(ext, X, Y), u.vertex_array()))

    a = restrict_profile(lambda x, y: 0.3 + 0.7 * x - 0.2 * y, g)
    pts = rng.uniform(-3, 3, size=(2, 500))
    affine_err = float(np.max(np.abs(evaluate(AffineExtension.from_field(a), *pts)
                                     - (0.3 + 0.7 * pts[0] - 0.2 * pts[1]))))

    grad = extension_grad_ratios(rng, n=1000)
    worst_grad = max(float(r.max()) for r in grad.values())
    worst_trace = {v: float(trace_ratios(rng, v, n=200).max()) for v in ((1, 0), (1, 1), (2, 1))}
    ok = (coincide and affine_err < 1e-12 and worst_grad <= 1.0
          and all(w <= trace_ratio_bound(1.0) for w in worst_trace.values()))
    assert report(8, ok, f"vertex match {coincide}, affine error {affine_err:.1e}, grad ratio "
                         f"{worst_grad:.3f} <= 1, trace ratios "
                         + ", ".join(f"{w:.3f}" for w in worst_trace.values())
                         + f" <= {trace_ratio_bound(1.0):.3f}")


def test_criterion_09_vertex_sum_discrepancy(report):
    profile = lambda x, y: np.exp(-(x**2 + y**2) / 2)
    d = [vertex_sum_discrepancy(profile, Z2, eps, 2.5) for eps in (0.4, 0.2, 0.1)]
    ratios = [b / a if a > 0 else np.inf for a, b in zip(d, d[1:])]
    ok = all(0.3 <= r <= 0.7 for r in ratios)
    assert report(9, ok, "discrepancies " + ", ".join(f"{x:.2e}" for x in d)
                  + "; ratios " + ", ".join(f"{r:.3g}" for r in ratios) + " (want [0.3, 0.7])")


@pytest.mark.slow
def test_criterion_10_planar(report):
    cfg = SolveConfig(grad_tol=1e-9)
    plane = {h: planar_ground_state(LimitCase(PLANE), 2.5, 2.5, 1.0, int(12 / h), h, cfg, max_doublings=0)
             for h in (0.25, 0.125, 0.0625)}
    E1, E2, E3 = (plane[h].energy for h in (0.25, 0.125, 0.0625))
    extrap, bound = (4 * E2 - E1) / 3, abs(E2 - E1) / 3
    richardson = abs(E3 - extrap) <= bound

    res = plane[0.0625]
    u = res.state.reshape(res.problem.n, -1)
    u = u if u.sum() > 0 else -u
    sup = np.abs(u).max()
    field = res.problem.to_field(res.state)
    turned = rotate_field(field, pi / 4).values
    sym = max(np.abs(u - u.T).max(), np.abs(u - u[::-1, :]).max(),
              float(np.abs(np.abs(turned) - np.abs(field.values)).max()))
    radial = sym < 1e-3 * sup

    N, h = 48, 0.25
    only_p = planar_ground_state(LimitCase(PLANE), 2.5, 2.5, 1.0, N, h, cfg, coef_q=0.0, max_doublings=0)
    only_q = planar_ground_state(LimitCase(PLANE), 3.0, 2.5, 1.0, N, h, cfg, coef_p=0.0, max_doublings=0)
    ordering = E1 < min(only_p.energy, only_q.energy) < 0

    jr = [jump_residual(planar_ground_state(LimitCase(LINE), 2.5, 2.5, 1.0, int(12 / h), h, cfg,
                                            max_doublings=0)) for h in (0.25, 0.125)]
    jump_ok = 0.35 <= jr[1] / jr[0] <= 0.65
    ok = richardson and radial and ordering and jump_ok
    assert report(10, ok, f"Richardson |E_h/4 - extrap| {abs(E3 - extrap):.1e} <= {bound:.1e}; "
                          f"symmetry {sym / sup:.1e} of sup; ordering {ordering}; "
                          f"jump ratio {jr[1] / jr[0]:.3f}")


@pytest.mark.slow
def test_criterion_11_plane_limit(report):
    t = sweep_epsilon(LimitCase(PLANE), Z2, 2.5, 2.5, 1.0, EPS).trend()
    assert report(11, t["passed"], _trend_text(t))


def _trend_text(t):
    return ("gaps " + ", ".join(f"{g:.2e}" for g in t["gaps"])
            + f"; final relative gap {t['final_gap_relative']:.1e}; H1 distances "
            + ", ".join(f"{d:.4f}" for d in t["distances"]) + f"; last ratio {t['h1_last_ratio']:.2f}")


@pytest.mark.slow
def test_criterion_12_line_and_strip_limits(report):
    line = sweep_epsilon(LimitCase(LINE), ZX, 2.5, 2.5, 1.0, EPS)
    line_y = sweep_epsilon(LimitCase(LINE), ZY, 2.5, 2.5, 1.0, EPS)
    strip = sweep_epsilon(LimitCase(STRIP, R=1.0), ZX, 2.5, 2.5, 1.0, EPS)
    tl, ts = line.trend(), strip.trend()
    # lattice symmetry: the two sweeps solve quarter-turned copies of the same problems
    worst = 0.0
    for a, b in zip(line.rows, line_y.rows):
        for name in ("scaled_energy", "energy_gap", "h1_distance_aligned", "scaled_vertex_sum"):
            x, y = getattr(a, name), getattr(b, name)
            worst = max(worst, abs(x - y) / max(abs(x), 1e-300))
    symmetric = worst < 1e-6
    ok = tl["passed"] and ts["passed"] and symmetric
    assert report(12, ok, f"Line [{_trend_text(tl)}]; Strip [{_trend_text(ts)}]; "
                          f"(1,0) vs (0,1) worst relative difference {worst:.1e}")
