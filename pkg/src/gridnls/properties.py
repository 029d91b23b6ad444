"""Randomised and refinement checks of the discrete inequalities and identities."""
from __future__ import annotations

from dataclasses import dataclass
from math import atan2, sqrt

import numpy as np

from . import periodic as ps
from .energy import EnergyParams, energy, gradient
from .extension import AffineExtension, planar_norms, trace_derivative_sq
from .fields import GridField, derivative_sq, inner, mass, norm_r, restrict_profile
from .grid import GridSpec, build_grid


# empirical cap for the Gagliardo-Nirenberg ratio at p = 4 (observed maxima stay near 0.4)
GN_CAP = 1.0


@dataclass
class PropertyRow:
    name: str
    n_samples: int
    worst: float
    bound: float
    passed: bool


def random_field(grid, rng, decay: float | None = None) -> GridField:
    """Random values under a Gaussian envelope, zero on the window boundary."""
    if decay is None:
        decay = grid.window * grid.epsilon / 3
    env = restrict_profile(lambda x, y: np.exp(-(x**2 + y**2) / (2 * decay**2)), grid)
    vv = rng.standard_normal(grid.n_vertices) * env.vertex_values
    vv[grid.boundary] = 0.0
    ev = rng.standard_normal((grid.n_edges, grid.m)) * env.edge_values
    return GridField(grid, vv, ev)


def gradient_mismatch(u: GridField, h: GridField, params: EnergyParams, vset,
                      delta: float = 1e-6) -> float:
    """``|<g, h> - central difference| / (1 + |<g, h>|)``."""
    g = gradient(u, params, vset)
    exact = inner(g, h)
    fd = (energy(u + h * delta, params, vset) - energy(u - h * delta, params, vset)) / (2 * delta)
    return abs(exact - fd) / (1 + abs(exact))


def check_gradient(rng, n: int = 100, tol: float = 1e-6) -> PropertyRow:
    grid = build_grid(GridSpec(1.0, 3, 2))
    vset = ps.materialize(ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0)), grid)
    params = EnergyParams(2.5, 2.5)
    worst = max(
        gradient_mismatch(random_field(grid, rng), random_field(grid, rng), params, vset)
        for _ in range(n)
    )
    return PropertyRow("gradient_fd_mismatch", n, worst, tol, worst < tol)


def gn_ratio(u: GridField, p: float) -> float:
    """``||u||_p / (||u||_2^(1/2+1/p) ||u'||_2^(1/2-1/p))``."""
    a = np.sqrt(mass(u)) ** (0.5 + 1 / p)
    b = np.sqrt(derivative_sq(u)) ** (0.5 - 1 / p)
    return norm_r(u, p) / (a * b)


def gn_ratios(rng, n: int = 1000, p: float = 4.0, epsilon: float = 1.0, window: int = 6, m: int = 2):
    grid = build_grid(GridSpec(epsilon, window, m))
    return np.array([gn_ratio(random_field(grid, rng), p) for _ in range(n)])


def extension_grad_ratios(rng, eps_list=(1.0, 0.5, 0.25), n: int = 1000, window_length: float = 4.0,
                          m: int = 1) -> dict:
    """Per ``epsilon``, the ratios ``||grad A u||^2 / (epsilon ||u'||^2)`` over random fields."""
    out = {}
    for eps in eps_list:
        grid = build_grid(GridSpec(eps, int(round(window_length / eps)), m))
        r = []
        for _ in range(n):
            u = random_field(grid, rng)
            r.append(planar_norms(AffineExtension.from_field(u)).grad_l2_sq / (eps * derivative_sq(u)))
        out[eps] = np.array(r)
    return out


def trace_ratio_bound(epsilon: float) -> float:
    """Cap on :func:`trace_ratios`: a line meets each triangle in a chord of length
    at most ``sqrt(2) epsilon``, each edge belongs to two triangles, and an edge's
    squared end difference is at most ``epsilon`` times its share of ``||u'||^2``."""
    return 2 * sqrt(2) / epsilon


def trace_ratios(rng, v, n: int = 200, epsilon: float = 1.0, window: int = 6, m: int = 1) -> np.ndarray:
    """``||(tau_theta A u)'||^2 / (epsilon ||u'||^2)`` along the line spanned by ``v``."""
    grid = build_grid(GridSpec(epsilon, window, m))
    theta = atan2(v[1], v[0])
    out = []
    for _ in range(n):
        u = random_field(grid, rng)
        out.append(trace_derivative_sq(AffineExtension.from_field(u), theta) / (epsilon * derivative_sq(u)))
    return np.array(out)


def vertex_sum_discrepancy(profile, vspec: ps.VertexSetSpec, epsilon: float, q: float,
                           window_length: float = 8.0, m: int = 1) -> float:
    """``|epsilon (2 #Q0 / #V0) sum_V |u|^q - ||u||_q^q|`` for a profile restricted to the grid."""
    cell = ps.build_cell(vspec)
    grid = build_grid(GridSpec(epsilon, int(round(window_length / epsilon)), m))
    u = restrict_profile(profile, grid)
    idx = ps.materialize(vspec, grid)
    s = epsilon * 2 * cell.n_vertices_q0 / cell.n_v0 * float(np.sum(np.abs(u.flat()[idx]) ** q))
    return abs(s - norm_r(u, q) ** q)


def mass_map_concavity(u: GridField, params: EnergyParams, vset, mus) -> float:
    """Largest chord excess of ``mu -> E(sqrt(mu) u / ||u||)`` over consecutive triples (<= 0 if concave)."""
    mus = np.sort(np.asarray(mus, dtype=float))
    unit = u * (1.0 / np.sqrt(mass(u)))
    E = [energy(unit * np.sqrt(m), params, vset) for m in mus]
    worst = -np.inf
    for a in range(len(mus) - 2):
        t = (mus[a + 1] - mus[a]) / (mus[a + 2] - mus[a])
        worst = max(worst, (1 - t) * E[a] + t * E[a + 2] - E[a + 1])
    return float(worst)


def run_all(seed: int = 0, n: int = 100) -> list[PropertyRow]:
    """The randomised checks behind ``check-properties``; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    rows = [check_gradient(rng, n)]

    gn = gn_ratios(rng, n)
    rows.append(PropertyRow("gn_ratio_p4", n, float(gn.max()), GN_CAP, bool(gn.max() < GN_CAP)))

    ext = extension_grad_ratios(rng, n=max(10, n // 4))
    worst = max(float(r.max()) for r in ext.values())
    # each edge's end difference enters two triangles with weight 1/2, and
    # epsilon * int_e |u'|^2 is at least that squared difference: the ratio is <= 1
    rows.append(PropertyRow("extension_grad_ratio", sum(len(r) for r in ext.values()), worst, 1.0,
                            worst <= 1.0 + 1e-12))

    for v in ((1, 0), (1, 1), (2, 1)):
        tr = trace_ratios(rng, v, n=max(10, n // 4))
        cap = trace_ratio_bound(1.0)
        rows.append(PropertyRow(f"trace_ratio_{v[0]}_{v[1]}", len(tr), float(tr.max()), cap,
                                bool(tr.max() <= cap)))

    grid = build_grid(GridSpec(1.0, 4, 2))
    vset = ps.materialize(ps.VertexSetSpec.finite([(0, 0)]), grid)
    params = EnergyParams(2.5, 2.5)
    worst = max(mass_map_concavity(random_field(grid, rng), params, vset, np.linspace(0.1, 4, 12))
                for _ in range(max(10, n // 4)))
    rows.append(PropertyRow("mass_map_concavity", max(10, n // 4), worst, 1e-12, worst <= 1e-12))
    return rows
