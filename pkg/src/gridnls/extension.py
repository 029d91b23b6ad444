"""Piecewise-affine extension of grid fields to the plane.

Each grid square ``[eps i, eps(i+1)] x [eps j, eps(j+1)]`` is cut along its
diagonal into a down triangle ``D`` (below the diagonal) and an up triangle
``U``; on each the extension is the affine interpolant of the three corner
vertex values.  Edge-interior samples are not used.  Outside the window the
extension is zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .fields import GridField
from .planar import PlanarField

_S15 = sqrt(15.0)
# 7-point degree-5 rule on a triangle (barycentric points, weights summing to 1)
_A1, _B1 = (9 - 2 * _S15) / 21, (6 + _S15) / 21
_A2, _B2 = (9 + 2 * _S15) / 21, (6 - _S15) / 21
_W1, _W2 = (155 + _S15) / 1200, (155 - _S15) / 1200
TRI_POINTS = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3],
        [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
        [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
    ]
)
TRI_WEIGHTS = np.array([9 / 40, _W1, _W1, _W1, _W2, _W2, _W2])


@dataclass(eq=False)
class AffineExtension:
    vertex_values: np.ndarray  # shape (2W+1, 2W+1), indexed [i + W, j + W]
    epsilon: float
    window: int

    @classmethod
    def from_field(cls, u: GridField) -> "AffineExtension":
        return cls(u.vertex_array().copy(), u.grid.epsilon, u.grid.window)

    def triangle(self, i: int, j: int, kind: str) -> tuple[float, float, float]:
        """Corner values of ``D_ij`` (``(i,j), (i+1,j), (i+1,j+1)``) or ``U_ij`` (``(i,j), (i+1,j+1), (i,j+1)``)."""
        W = self.window
        a, b = i + W, j + W
        u = self.vertex_values
        if kind == "D":
            return u[a, b], u[a + 1, b], u[a + 1, b + 1]
        if kind == "U":
            return u[a, b], u[a + 1, b + 1], u[a, b + 1]
        raise ValueError("triangle kind is 'U' or 'D'")

    def corner_arrays(self):
        """Corner values of all ``D`` and ``U`` triangles, each of shape ``(2W, 2W)``."""
        u = self.vertex_values
        u00, u10, u11, u01 = u[:-1, :-1], u[1:, :-1], u[1:, 1:], u[:-1, 1:]
        return (u00, u10, u11), (u00, u11, u01)

    def __call__(self, x, y):
        return evaluate(self, x, y)


def evaluate(ext: AffineExtension, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eps, W = ext.epsilon, ext.window
    X = x / eps
    Y = y / eps
    inside = (np.abs(X) <= W * (1 + 1e-13)) & (np.abs(Y) <= W * (1 + 1e-13))
    i = np.clip(np.floor(X).astype(int), -W, W - 1)
    j = np.clip(np.floor(Y).astype(int), -W, W - 1)
    s = np.clip(X - i, 0.0, 1.0)
    t = np.clip(Y - j, 0.0, 1.0)
    u = ext.vertex_values
    a, b = i + W, j + W
    u00 = u[a, b]
    u10 = u[a + 1, b]
    u11 = u[a + 1, b + 1]
    u01 = u[a, b + 1]
    down = s >= t
    val = np.where(
        down,
        (1 - s) * u00 + t * u11 + (s - t) * u10,
        (1 - t) * u00 + s * u11 + (t - s) * u01,
    )
    return np.where(inside, val, 0.0)


def _all_triangles(ext: AffineExtension) -> np.ndarray:
    (d0, d1, d2), (u0, u1, u2) = ext.corner_arrays()
    tri = np.stack(
        [np.concatenate([d0.ravel(), u0.ravel()]),
         np.concatenate([d1.ravel(), u1.ravel()]),
         np.concatenate([d2.ravel(), u2.ravel()])],
        axis=1,
    )
    return tri


def _split_by_sign(tri: np.ndarray, area: float):
    """Cut sign-changing triangles along the zero line; return corner values and areas."""
    pos = tri > 0
    neg = tri < 0
    mixed = pos.any(axis=1) & neg.any(axis=1)
    keep_vals = [tri[~mixed]]
    keep_area = [np.full((~mixed).sum(), area)]
    if mixed.any():
        T = tri[mixed]
        # isolate the corner whose sign occurs once among the nonzero corners
        single_pos = (T > 0).sum(axis=1) == 1
        odd = np.where(single_pos, np.argmax(T > 0, axis=1), np.argmax(T < 0, axis=1))
        rows = np.arange(len(T))
        a = T[rows, odd]
        b = T[rows, (odd + 1) % 3]
        c = T[rows, (odd + 2) % 3]
        tb = np.where(a * b < 0, a / (a - b), 1.0)
        tc = np.where(a * c < 0, a / (a - c), 1.0)
        z = np.zeros_like(a)
        keep_vals += [np.stack([a, z, z], 1), np.stack([z, b, c], 1), np.stack([z, c, z], 1)]
        keep_area += [area * tb * tc, area * (1 - tb), area * tb * (1 - tc)]
    return np.concatenate(keep_vals), np.concatenate(keep_area)


def lr_integral(ext: AffineExtension, r: float) -> float:
    """``int |A u|^r`` over the plane by the 7-point rule on sign-split triangles."""
    area = 0.5 * ext.epsilon**2
    vals, areas = _split_by_sign(_all_triangles(ext), area)
    f = vals @ TRI_POINTS.T
    return float(np.sum(areas * (np.abs(f) ** r @ TRI_WEIGHTS)))


@dataclass(frozen=True)
class PlanarNorms:
    l2_sq: float
    grad_l2_sq: float
    lr: dict


def planar_norms(ext: AffineExtension, rs=()) -> PlanarNorms:
    """Exact ``||A u||_2^2`` and ``||grad A u||_2^2``; ``int |A u|^r`` for each requested ``r``."""
    eps = ext.epsilon
    area = 0.5 * eps**2
    tri = _all_triangles(ext)
    a, b, c = tri.T
    l2 = area / 6 * float(np.sum(a * a + b * b + c * c + a * b + b * c + c * a))
    (d0, d1, d2), (u0, u1, u2) = ext.corner_arrays()
    gd = ((d1 - d0) ** 2 + (d2 - d1) ** 2) / eps**2
    gu = ((u1 - u2) ** 2 + (u2 - u0) ** 2) / eps**2
    grad = area * float(np.sum(gd) + np.sum(gu))
    return PlanarNorms(l2, grad, {r: lr_integral(ext, r) for r in rs})


def rasterize(ext: AffineExtension, box, h: float, shift=(0.0, 0.0)) -> PlanarField:
    """Sample ``A u(P + shift)`` on the raster of step ``h`` covering ``box = (xmin, xmax, ymin, ymax)``."""
    if not h > 0:
        raise ValueError("raster step must be positive")
    xmin, xmax, ymin, ymax = box
    nx = int(np.floor((xmax - xmin) / h + 1e-9)) + 1
    ny = int(np.floor((ymax - ymin) / h + 1e-9)) + 1
    xs = xmin + h * np.arange(nx)
    ys = ymin + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = evaluate(ext, X + shift[0], Y + shift[1])
    return PlanarField(vals, h, xmin, ymin)


def line_crossings(ext: AffineExtension, theta: float) -> np.ndarray:
    """Arclength parameters where ``t (cos theta, sin theta)`` crosses triangle edges inside the window."""
    eps, W = ext.epsilon, ext.window
    c, s = np.cos(theta), np.sin(theta)
    tmax = np.inf
    if abs(c) > 1e-14:
        tmax = min(tmax, W * eps / abs(c))
    if abs(s) > 1e-14:
        tmax = min(tmax, W * eps / abs(s))
    ks = np.arange(-2 * W, 2 * W + 1)
    ts = [np.array([-tmax, tmax])]
    if abs(c) > 1e-14:
        ts.append(eps * ks / c)
    if abs(s) > 1e-14:
        ts.append(eps * ks / s)
    if abs(s - c) > 1e-14:
        ts.append(eps * ks / (s - c))
    t = np.concatenate(ts)
    t = np.sort(t[np.abs(t) <= tmax * (1 + 1e-13)])
    keep = np.concatenate([[True], np.diff(t) > 1e-12 * max(1.0, tmax)])
    return t[keep]


def trace_derivative_sq(ext: AffineExtension, theta: float) -> float:
    """``||(tau_theta A u)'||^2`` along the line through the origin at angle ``theta``, exact."""
    t = line_crossings(ext, theta)
    c, s = np.cos(theta), np.sin(theta)
    f = evaluate(ext, t * c, t * s)
    dt = np.diff(t)
    return float(np.sum(np.diff(f) ** 2 / dt))


def trace_lq(ext: AffineExtension, theta: float, q: float) -> float:
    """``int |tau_theta A u|^q`` along the line at angle ``theta`` (7-point Gauss-Legendre per segment)."""
    t = line_crossings(ext, theta)
    c, s = np.cos(theta), np.sin(theta)
    nodes, weights = np.polynomial.legendre.leggauss(7)
    mid = 0.5 * (t[1:] + t[:-1])
    half = 0.5 * np.diff(t)
    tt = mid[:, None] + half[:, None] * nodes[None, :]
    f = evaluate(ext, tt * c, tt * s)
    return float(np.sum(half[:, None] * weights[None, :] * np.abs(f) ** q))
