"""Numerical experiments: singular-limit sweeps and existence/threshold probes."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import atan2, hypot, isfinite, pi, sqrt

import numpy as np

from . import periodic as ps
from .energy import EnergyParams, GridProblem
from .extension import AffineExtension, evaluate
from .fields import derivative_sq, norm_r, restrict_profile
from .flow import NEGATIVE, ZERO, SolveConfig, SolveResult, minimize, sign_of_level
from .grid import GridSpec, build_grid
from .planar import LINE, PLANE, STRIP, LimitCase, PlanarField, planar_ground_state, rotate_field

log = logging.getLogger(__name__)

UNDETERMINED = "Undetermined"


def theta_of(v) -> float:
    v1, v2 = v
    return atan2(v2, v1) if v1 != 0 else pi / 2


def _theta_canonical(v) -> float:
    v1, v2 = v
    return np.arctan(v2 / v1) if v1 != 0 else pi / 2


def gaussian_field(grid, center=(0.0, 0.0), width=1.0):
    cx, cy = center
    return restrict_profile(
        lambda x, y: np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * width**2)), grid
    )


def normalize_sign(problem, x: np.ndarray) -> np.ndarray:
    return -x if float(np.sum(problem.weights * x)) < 0 else x


# --------------------------------------------------------------------------- sweeps


@dataclass
class SweepRow:
    epsilon: float
    grid_mass: float
    alpha_used: float
    beta_used: float
    scaled_energy: float
    planar_energy_ref: float
    energy_gap: float
    h1_distance_aligned: float
    translation_x: float
    translation_y: float
    scaled_kinetic: float
    scaled_p_term: float
    scaled_vertex_sum: float
    window: int
    m: int
    n_dofs: int
    iterations: int
    converged: bool


@dataclass
class PlanarReference:
    case: LimitCase
    energy: float
    energy_coarse: float
    energy_fine: float
    order: float
    field: PlanarField
    lam: float


def planar_reference(case: LimitCase, p, q, mu, h=0.0625, half_width=16.0,
                     config: SolveConfig | None = None) -> PlanarReference:
    """Planar level extrapolated from rasters ``2h`` and ``h``; the state at ``h`` rotated by ``case.theta``.

    Strip membership is inclusive at ``|y| = R``, which makes that case first
    order in ``h``; the other two are second order.
    """
    order = 1.0 if case.kind == STRIP else 2.0
    base = LimitCase(case.kind, 0.0, case.R)
    coarse = planar_ground_state(base, p, q, mu, int(round(half_width / (2 * h))), 2 * h,
                                 config, max_doublings=0)
    fine = planar_ground_state(base, p, q, mu, int(round(half_width / h)), h,
                               config, max_doublings=0)
    k = 2.0**order
    extrap = (k * fine.energy - coarse.energy) / (k - 1)
    fld = fine.field
    fld = PlanarField(normalize_sign(fine.problem, fine.state).reshape(fld.shape), fld.h, fld.x0, fld.y0)
    if case.theta != 0.0:
        fld = rotate_field(fld, case.theta)
    return PlanarReference(case, extrap, coarse.energy, fine.energy, order, fld, fine.lam)


def limit_vertex_set(case: LimitCase, base: ps.VertexSetSpec, epsilon: float) -> ps.VertexSetSpec:
    if case.kind == STRIP:
        return ps.build_strip_set(base, case.R, epsilon)
    return base


def limit_params(case: LimitCase, base: ps.VertexSetSpec, epsilon: float, p, q, mu) -> EnergyParams:
    cell = ps.build_cell(base)
    thm = {PLANE: ps.Z2, LINE: ps.ZLINE, STRIP: ps.ZSTRIP}[case.kind]
    v = base.vectors[0]
    alpha, beta = ps.beta_for_theorem(thm, cell, v, epsilon)
    return EnergyParams(p, q, alpha, beta, 2 * mu / epsilon)


def h1_distance(ext: AffineExtension, ref: PlanarField, shift) -> float:
    """Discrete H^1 distance between ``A u(. + shift)`` and the reference on the reference raster."""
    xs, ys = ref.coords()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    diff = evaluate(ext, X + shift[0], Y + shift[1]) - ref.values
    h = ref.h
    l2 = h * h * np.sum(diff**2)
    grad = np.sum(np.diff(diff, axis=0) ** 2) + np.sum(np.diff(diff, axis=1) ** 2)
    return float(sqrt(l2 + grad))


def _sweep_row(args) -> tuple[SweepRow, SolveResult | None]:
    case, base, p, q, mu, eps, m, half_width, config, ref = args
    W = int(round(half_width / eps))
    grid = build_grid(GridSpec(eps, W, m))
    vspec = limit_vertex_set(case, base, eps)
    verts = ps.materialize(vspec, grid)
    params = limit_params(case, base, eps, p, q, mu)
    prob = GridProblem(grid, params, verts)
    x0 = prob.from_field(gaussian_field(grid, (0.0, 0.0), half_width / 6))
    res = minimize(prob, params.mu, x0, config)
    x = normalize_sign(prob, res.state)
    u = prob.to_field(x)
    ext = AffineExtension.from_field(u)
    k = int(np.argmax(np.abs(u.vertex_values)))
    shift = tuple(float(c) for c in grid.vertex_xy[k])
    scaled_energy = eps * res.energy
    if case.kind == LINE:
        vsum = eps * float(np.sum(np.abs(x[prob.vset_local]) ** q))
    else:
        vsum = eps**2 * float(np.sum(np.abs(x[prob.vset_local]) ** q))
    row = SweepRow(
        epsilon=eps,
        grid_mass=params.mu,
        alpha_used=params.alpha,
        beta_used=params.beta,
        scaled_energy=scaled_energy,
        planar_energy_ref=ref.energy,
        energy_gap=abs(scaled_energy - ref.energy),
        h1_distance_aligned=h1_distance(ext, ref.field, shift),
        translation_x=shift[0],
        translation_y=shift[1],
        scaled_kinetic=eps * derivative_sq(u),
        scaled_p_term=eps * norm_r(u, p) ** p,
        scaled_vertex_sum=vsum,
        window=W,
        m=m,
        n_dofs=prob.size,
        iterations=res.iterations,
        converged=res.converged,
    )
    res.state = x
    return row, res


def sweep_epsilon(
    case: LimitCase,
    base: ps.VertexSetSpec,
    p: float,
    q: float,
    mu: float,
    eps_list,
    m: int = 2,
    half_width: float = 12.0,
    config: SolveConfig | None = None,
    reference: PlanarReference | None = None,
    ref_h: float = 0.0625,
    ref_half_width: float = 16.0,
    workers: int = 1,
    keep_states: bool = False,
):
    """Grid ground states at mass ``2 mu / eps`` against the planar limit, one row per ``eps``.

    The window half-width ``W eps`` stays at ``half_width``.  ``base`` is the
    unit-grid vertex set (``Z^2`` for the plane case, the Z-periodic set for
    line and strip cases); the limit angle follows from its generating vector.
    """
    config = config or SolveConfig(grad_tol=1e-8)
    if case.kind != PLANE:
        th = _theta_canonical(base.vector)
        case = LimitCase(case.kind, th, case.R)
    if reference is None:
        reference = planar_reference(case, p, q, mu, h=ref_h, half_width=ref_half_width)
    jobs = [(case, base, p, q, mu, float(e), m, half_width, config, reference) for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_sweep_row, jobs))
    else:
        out = [_sweep_row(j) for j in jobs]
    rows = [r for r, _ in out]
    states = [s for _, s in out] if keep_states else None
    for r in rows:
        if not r.converged:
            log.warning("sweep row eps=%g did not converge; excluded from trend checks", r.epsilon)
    return SweepResult(case, reference, rows, states)


@dataclass
class SweepResult:
    case: LimitCase
    reference: PlanarReference
    rows: list[SweepRow]
    states: list | None = field(default=None, repr=False)

    def trend(self, gap_rel_max=0.10, last_ratio_max=0.8) -> dict:
        return sweep_trend(self.rows, gap_rel_max, last_ratio_max)


def sweep_trend(rows, gap_rel_max=0.10, last_ratio_max=0.8) -> dict:
    good = [r for r in rows if r.converged]
    gaps = [r.energy_gap for r in good]
    dists = [r.h1_distance_aligned for r in good]
    gaps_dec = len(gaps) >= 2 and all(b < a for a, b in zip(gaps, gaps[1:]))
    dist_dec = len(dists) >= 2 and all(b < a for a, b in zip(dists, dists[1:]))
    ref = good[-1].planar_energy_ref if good else float("nan")
    final_rel = gaps[-1] / abs(ref) if good else float("inf")
    last_ratio = dists[-1] / dists[-2] if len(dists) >= 2 else float("inf")
    ok = bool(gaps_dec and dist_dec and final_rel <= gap_rel_max and last_ratio <= last_ratio_max
              and len(good) == len(rows))
    return {
        "gaps": gaps,
        "distances": dists,
        "gaps_decreasing": gaps_dec,
        "final_gap_relative": final_rel,
        "h1_decreasing": dist_dec,
        "h1_last_ratio": last_ratio,
        "all_converged": len(good) == len(rows),
        "passed": ok,
    }


# ------------------------------------------------------------------ existence probes


def default_inits(grid, vertices, n_starts: int = 4, width: float | None = None):
    """Localised Gaussian starts: on nonlinear vertices nearest the origin, then off them."""
    eps = grid.epsilon
    W = grid.window
    if width is None:
        width = W * eps / 6
    xy = grid.vertex_xy
    centers = []
    if len(vertices):
        vx = xy[vertices]
        order = np.lexsort((vx[:, 1], vx[:, 0], np.hypot(vx[:, 0], vx[:, 1])))
        centers.extend(tuple(vx[k]) for k in order[: max(1, n_starts // 2)])
    in_v = set(map(int, vertices))
    nearest = np.argsort(np.hypot(xy[:, 0], xy[:, 1]), kind="stable")
    for k in nearest:
        if len(centers) >= n_starts:
            break
        if int(k) not in in_v and not grid.boundary[k]:
            centers.append(tuple(xy[k]))
    # when V fills the window, the remaining starts go on further V vertices
    for k in nearest:
        if len(centers) >= n_starts:
            break
        c = tuple(xy[k])
        if not grid.boundary[k] and c not in centers:
            centers.append(c)
    widths = [width, max(eps, width / 4)]
    fields = []
    for i, c in enumerate(centers):
        fields.append(gaussian_field(grid, c, widths[i % 2]))
    return fields


@dataclass
class Probe:
    mu: float
    sign: str
    energy: float


def probe_sign(p, q, vspec: ps.VertexSetSpec, epsilon: float, mu: float, *, window: int = 16,
               m: int = 2, alpha: float = 1.0, beta: float = 1.0,
               config: SolveConfig | None = None, n_starts: int = 4,
               neg_tol: float | None = None) -> Probe:
    config = config or SolveConfig(grad_tol=1e-9, max_iters=5000)
    grid = build_grid(GridSpec(epsilon, window, m))
    verts = ps.materialize(vspec, grid)
    prob = GridProblem(grid, EnergyParams(p, q, alpha, beta, mu), verts)
    inits = [prob.from_field(f) for f in default_inits(grid, verts, n_starts)]
    s = sign_of_level(prob, mu, config, inits, neg_tol)
    return Probe(mu, s.sign, s.energy)


@dataclass
class ThresholdReport:
    p: float
    q: float
    kind: str
    mu_lo: float
    mu_hi: float
    probes: list[Probe]
    straddles: bool
    note: str = ""


def find_threshold(p, q, vspec: ps.VertexSetSpec, epsilon: float, mu_bracket, iters: int = 6,
                   **probe_kw) -> ThresholdReport:
    """Bisect (geometrically) for the mass where the level turns negative.

    The bracket must straddle: Zero at the lower end, Negative at the upper
    end.  If the lower end is already Negative the threshold is reported as
    0; if the upper end is Zero no bisection is done.
    """
    lo, hi = map(float, mu_bracket)
    if not 0 < lo < hi:
        raise ValueError("mass bracket must satisfy 0 < lo < hi")
    probes = [probe_sign(p, q, vspec, epsilon, lo, **probe_kw)]
    if probes[0].sign == NEGATIVE:
        return ThresholdReport(p, q, vspec.kind, 0.0, lo, probes, False,
                               "lower end already negative: threshold is 0 within resolution")
    probes.append(probe_sign(p, q, vspec, epsilon, hi, **probe_kw))
    if probes[1].sign == ZERO:
        return ThresholdReport(p, q, vspec.kind, lo, hi, probes, False,
                               "bracket does not straddle: upper end is Zero")
    for _ in range(iters):
        mid = sqrt(lo * hi)
        pr = probe_sign(p, q, vspec, epsilon, mid, **probe_kw)
        probes.append(pr)
        if pr.sign == NEGATIVE:
            hi = mid
        else:
            lo = mid
    return ThresholdReport(p, q, vspec.kind, lo, hi, probes, True)


def analytic_sign(kind: str, p: float, q: float, mu: float, small_mu: float = 1e-2) -> str:
    """Expected classification from the existence theory.

    Where a positive threshold mass exists its value is unknown, so masses
    at or below ``small_mu`` are expected Zero and larger ones are left
    undetermined.
    """
    if kind == ps.Z2_PERIODIC:
        return NEGATIVE
    if kind == ps.Z_PERIODIC:
        always = p < 4 or q < 3
    else:
        always = p < 4
    if always:
        return NEGATIVE
    return ZERO if mu <= small_mu else UNDETERMINED


@dataclass
class PhaseCell:
    kind: str
    p: float
    q: float
    mu: float
    numeric: str
    energy: float
    analytic: str
    mismatch: bool


def _phase_cell(args) -> PhaseCell:
    vspec, p, q, mu, eps, small_mu, kw = args
    pr = probe_sign(p, q, vspec, eps, mu, **kw)
    an = analytic_sign(vspec.kind, p, q, mu, small_mu)
    return PhaseCell(vspec.kind, p, q, mu, pr.sign, pr.energy, an,
                     an != UNDETERMINED and an != pr.sign)


def phase_table(vspec: ps.VertexSetSpec, p_list, q_list, mu_list, epsilon: float = 1.0,
                small_mu: float = 1e-2, workers: int = 1, **probe_kw) -> list[PhaseCell]:
    for p in p_list:
        if not 2 < p < 6:
            raise ValueError(f"p={p} outside (2,6)")
    for q in q_list:
        if not 2 < q < 4:
            raise ValueError(f"q={q} outside (2,4)")
    jobs = [(vspec, float(p), float(q), float(mu), epsilon, small_mu, probe_kw)
            for p in p_list for q in q_list for mu in mu_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_phase_cell, jobs))
    return [_phase_cell(j) for j in jobs]


def ground_level(p, q, vspec, epsilon, mu, *, window=16, m=2, alpha=1.0, beta=1.0,
                 config: SolveConfig | None = None, n_starts: int = 4) -> float:
    """Best energy over several starts (an upper estimate of the level)."""
    config = config or SolveConfig(grad_tol=1e-9, max_iters=20000)
    grid = build_grid(GridSpec(epsilon, window, m))
    verts = ps.materialize(vspec, grid)
    prob = GridProblem(grid, EnergyParams(p, q, alpha, beta, mu), verts)
    best = np.inf
    for f in default_inits(grid, verts, n_starts):
        best = min(best, minimize(prob, mu, prob.from_field(f), config).energy)
    return float(best)


@dataclass
class ConcavityReport:
    mus: list[float]
    levels: list[float]
    nonpositive: bool
    concave: bool
    worst_violation: float


def concavity_check(vspec, p, q, epsilon, mu_grid, tol: float = 1e-6, pos_tol: float = 1e-10,
                    **level_kw) -> ConcavityReport:
    mus = sorted(float(m) for m in mu_grid)
    levels = [ground_level(p, q, vspec, epsilon, mu, **level_kw) for mu in mus]
    worst = 0.0
    for a, b, c in zip(range(len(mus)), range(1, len(mus)), range(2, len(mus))):
        t = (mus[b] - mus[a]) / (mus[c] - mus[a])
        chord = (1 - t) * levels[a] + t * levels[c]
        worst = max(worst, chord - levels[b])
    nonpos = all(E <= pos_tol for E in levels)
    return ConcavityReport(mus, levels, nonpos, worst <= tol, worst)


def write_csv(rows, path) -> None:
    rows = [asdict(r) if not isinstance(r, dict) else r for r in rows]
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
