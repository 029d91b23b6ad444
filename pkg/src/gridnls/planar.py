"""Ground states of the planar limit problems on a truncated square raster.

Three cases share one discretisation (5-point stencil, zero outside the box):

* ``Plane``: ``1/2 |grad u|^2 - 1/p |u|^p - 1/q |u|^q`` over the plane
* ``Line``:  the ``q``-term lives on the trace of ``u`` along ``y = 0``
* ``Strip``: the ``q``-term is restricted to ``|y| <= R``

Solves always use the horizontal orientation; a rotated reference for an
angle ``theta`` is obtained afterwards with :func:`rotate_field`.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isclose, pi
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import map_coordinates

from .flow import SolveConfig, SolveResult, minimize

PLANE = "Plane"
LINE = "Line"
STRIP = "Strip"


@dataclass(frozen=True)
class LimitCase:
    kind: str
    theta: float = 0.0
    R: float | None = None

    def __post_init__(self):
        if self.kind not in (PLANE, LINE, STRIP):
            raise ValueError(f"unknown limit case {self.kind!r}")
        if self.kind == STRIP and not (self.R is not None and self.R > 0):
            raise ValueError("Strip case needs a positive half-width R")
        if not -pi / 2 < self.theta <= pi / 2 + 1e-15:
            raise ValueError(f"theta={self.theta} outside (-pi/2, pi/2]")


@dataclass(eq=False)
class PlanarField:
    """Raster values ``values[ix, iy]`` at ``(x0 + ix*h, y0 + iy*h)``, zero outside."""

    values: np.ndarray
    h: float
    x0: float
    y0: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.h, self.x0, self.y0 = float(self.h), float(self.x0), float(self.y0)
        if self.values.ndim != 2:
            raise ValueError("planar field values must be a 2-D array")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("planar field values must be finite")

    @classmethod
    def centered(cls, values, h) -> "PlanarField":
        nx, ny = np.shape(values)
        return cls(values, h, -h * (nx - 1) / 2, -h * (ny - 1) / 2)

    @property
    def shape(self):
        return self.values.shape

    def coords(self):
        nx, ny = self.values.shape
        return self.x0 + self.h * np.arange(nx), self.y0 + self.h * np.arange(ny)

    def mass(self) -> float:
        return float(self.h**2 * np.sum(self.values**2))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def dump_raster(field: PlanarField, path) -> None:
    nx, ny = field.values.shape
    header = f"planar h={field.h!r} nx={nx} ny={ny} x0={field.x0!r} y0={field.y0!r}\n"
    with open(Path(path), "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(field.values.astype("<f8").tobytes(order="C"))


def load_raster(path) -> PlanarField:
    with open(Path(path), "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != "planar":
            raise ValueError(f"{path} is not a planar raster dump")
        kv = dict(item.split("=", 1) for item in header[1:])
        nx, ny = int(kv["nx"]), int(kv["ny"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != nx * ny:
        raise ValueError(f"{path} holds {data.size} values, expected {nx * ny}")
    return PlanarField(data.reshape(nx, ny).copy(), float(kv["h"]), float(kv["x0"]), float(kv["y0"]))


def check_regime(case: LimitCase, p: float, q: float) -> None:
    """Refuse exponents for which the planar level is not attained for every mass."""
    if case.kind == LINE:
        ok = 2 < p < 4 and 2 < q < 3
        need = "p in (2,4) and q in (2,3)"
    else:
        ok = 2 < p < 4 and 2 < q < 4
        need = "p in (2,4) and q in (2,4)"
    if not ok:
        raise ValueError(
            f"{case.kind} case with p={p}, q={q}: ground states exist for every mass only "
            f"for {need}; outside this range the level can be -infinity"
        )


def laplacian_5pt(n: int) -> sp.csr_matrix:
    """Unscaled 5-point Dirichlet Laplacian on an ``n x n`` raster (``4u - neighbours``)."""
    T = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    I = sp.identity(n)
    return (sp.kron(T, I) + sp.kron(I, T)).tocsr()


class PlanarProblem:
    def __init__(self, case: LimitCase, p: float, q: float, N: int, h: float,
                 coef_p: float = 1.0, coef_q: float = 1.0):
        if N < 1 or not h > 0:
            raise ValueError("raster needs N >= 1 and h > 0")
        self.case, self.p, self.q, self.N, self.h = case, p, q, int(N), float(h)
        self.coef_p, self.coef_q = coef_p, coef_q
        n = 2 * self.N + 1
        self.n = n
        self.stiffness = laplacian_5pt(n)
        self.weights = np.full(n * n, h * h)
        self.q_weights = q_term_weights(case, self.N, h).ravel()

    @property
    def size(self) -> int:
        return self.n * self.n

    def energy(self, x: np.ndarray) -> float:
        kin = 0.5 * float(x @ (self.stiffness @ x))
        ax = np.abs(x)
        return (kin - self.coef_p / self.p * float(np.sum(self.weights * ax**self.p))
                - self.coef_q / self.q * float(np.sum(self.q_weights * ax**self.q)))

    def euclidean_gradient(self, x: np.ndarray) -> np.ndarray:
        ax = np.abs(x)
        return (self.stiffness @ x - self.coef_p * self.weights * ax ** (self.p - 2) * x
                - self.coef_q * self.q_weights * ax ** (self.q - 2) * x)

    def to_field(self, x: np.ndarray) -> PlanarField:
        return PlanarField.centered(x.reshape(self.n, self.n), self.h)

    def from_field(self, u: PlanarField) -> np.ndarray:
        return u.values.ravel().copy()

    def diagnostics(self, x: np.ndarray) -> dict:
        eg = self.euclidean_gradient(x)
        lam = -float(eg @ x) / float(np.sum(self.weights * x * x))
        sup = float(np.max(np.abs(x)))
        res = np.abs(eg + lam * self.weights * x) / (self.h**2 * sup)
        out = {"pde_residual": float(np.max(res))}
        if self.case.kind == LINE:
            out["jump_residual"] = jump_residual_values(x.reshape(self.n, self.n), self.h, self.q)
        out["boundary_ratio"] = boundary_ratio(x.reshape(self.n, self.n))
        return out


def q_term_weights(case: LimitCase, N: int, h: float) -> np.ndarray:
    n = 2 * N + 1
    w = np.zeros((n, n))
    y = h * np.arange(-N, N + 1)
    if case.kind == PLANE:
        w[:] = h * h
    elif case.kind == LINE:
        w[:, N] = h
    else:
        w[:, np.abs(y) <= case.R * (1 + 1e-12)] = h * h
    return w


def planar_energy(u: PlanarField, case: LimitCase, p: float, q: float) -> float:
    """Discrete planar energy of a centred square raster (forward differences, zero outside)."""
    nx, ny = u.values.shape
    if nx != ny or nx % 2 == 0:
        raise ValueError("planar energy expects a centred (2N+1)x(2N+1) raster")
    prob = PlanarProblem(case, p, q, (nx - 1) // 2, u.h)
    return prob.energy(u.values.ravel())


def boundary_ratio(values: np.ndarray) -> float:
    sup = float(np.max(np.abs(values)))
    if sup == 0:
        return 0.0
    edge = max(np.abs(values[0]).max(), np.abs(values[-1]).max(),
               np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
    return float(edge) / sup


def jump_residual_values(values: np.ndarray, h: float, q: float) -> float:
    n = values.shape[1]
    c = n // 2
    u0 = values[:, c]
    jump = (values[:, c + 1] - u0) / h - (u0 - values[:, c - 1]) / h
    return float(np.max(np.abs(jump + np.abs(u0) ** (q - 2) * u0)))


def jump_residual(result: SolveResult) -> float:
    """Defect of the flux-jump condition across the line for a Line-case solution."""
    prob = result.problem
    if prob.case.kind != LINE:
        raise ValueError("jump residual is defined for Line-case states")
    return jump_residual_values(result.state.reshape(prob.n, prob.n), prob.h, prob.q)


def gaussian_init(N: int, h: float, width: float | None = None) -> np.ndarray:
    n = 2 * N + 1
    if width is None:
        width = N * h / 6
    t = h * np.arange(-N, N + 1)
    X, Y = np.meshgrid(t, t, indexing="ij")
    return np.exp(-(X**2 + Y**2) / (2 * width**2)).ravel()


def planar_ground_state(
    case: LimitCase,
    p: float,
    q: float,
    mu: float,
    N: int,
    h: float,
    config: SolveConfig | None = None,
    *,
    coef_p: float = 1.0,
    coef_q: float = 1.0,
    init: np.ndarray | None = None,
    width: float | None = None,
    boundary_tol: float = 1e-8,
    max_doublings: int = 2,
) -> SolveResult:
    """Minimise the planar energy at mass ``mu``; the box is doubled while the solution touches it."""
    check_regime(case, p, q)
    if not mu > 0:
        raise ValueError("mass must be positive")
    config = config or SolveConfig(grad_tol=1e-9)
    for attempt in range(max_doublings + 1):
        prob = PlanarProblem(case, p, q, N, h, coef_p, coef_q)
        x0 = gaussian_init(N, h, width) if init is None else init
        res = minimize(prob, mu, x0, config)
        if res.diagnostics["boundary_ratio"] <= boundary_tol or attempt == max_doublings:
            return res
        # restart on a box twice as wide, seeded with the current state
        old = res.state.reshape(2 * N + 1, 2 * N + 1)
        init = np.pad(old, N).ravel()
        N *= 2
    return res


def rotate_field(u: PlanarField, theta: float) -> PlanarField:
    """Rotate a centred raster counter-clockwise by ``theta`` (bilinear, zero outside)."""
    k = theta / (pi / 2)
    if isclose(k, round(k), abs_tol=1e-12):
        return PlanarField(np.rot90(u.values, int(round(k)) % 4), u.h, u.x0, u.y0)
    xs, ys = u.coords()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    c, s = np.cos(theta), np.sin(theta)
    # value at P comes from R(-theta) P
    Xs = c * X + s * Y
    Ys = -s * X + c * Y
    coords = np.array([(Xs - u.x0) / u.h, (Ys - u.y0) / u.h])
    vals = map_coordinates(u.values, coords, order=1, mode="constant", cval=0.0)
    return PlanarField(vals, u.h, u.x0, u.y0)


def resample(u: PlanarField, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear samples of ``u`` on the tensor raster ``xs x ys`` (zero outside)."""
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    coords = np.array([(X - u.x0) / u.h, (Y - u.y0) / u.h])
    return map_coordinates(u.values, coords, order=1, mode="constant", cval=0.0)
