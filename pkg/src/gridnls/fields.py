"""Discrete functions on the truncated grid.

A field stores one value per vertex and ``m`` interior samples per edge, so
continuity at the vertices holds by construction.  Integrals use the
trapezoid rule on every edge, which gives a diagonal (lumped) mass.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .grid import Grid, GridSpec, build_grid, rotation_permutation


@dataclass(eq=False)
class GridField:
    grid: Grid
    vertex_values: np.ndarray
    edge_values: np.ndarray

    def __post_init__(self):
        self.vertex_values = np.asarray(self.vertex_values, dtype=float)
        self.edge_values = np.asarray(self.edge_values, dtype=float)
        if self.vertex_values.shape != (self.grid.n_vertices,):
            raise ValueError("vertex_values has the wrong shape")
        if self.edge_values.shape != (self.grid.n_edges, self.grid.m):
            raise ValueError("edge_values has the wrong shape")
        if not (np.all(np.isfinite(self.vertex_values)) and np.all(np.isfinite(self.edge_values))):
            raise ValueError("field values must be finite")

    @property
    def spec(self) -> GridSpec:
        return self.grid.spec

    @classmethod
    def zeros(cls, grid: Grid) -> "GridField":
        return cls(grid, np.zeros(grid.n_vertices), np.zeros((grid.n_edges, grid.m)))

    @classmethod
    def from_flat(cls, grid: Grid, x: np.ndarray) -> "GridField":
        nv = grid.n_vertices
        return cls(grid, x[:nv].copy(), x[nv:].reshape(grid.n_edges, grid.m).copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.vertex_values, self.edge_values.ravel()])

    def vertex_array(self) -> np.ndarray:
        """Vertex values as a ``(2W+1, 2W+1)`` array indexed ``[i + W, j + W]``."""
        n = self.grid.spec.side
        return self.vertex_values.reshape(n, n)

    def __mul__(self, c: float) -> "GridField":
        return GridField(self.grid, c * self.vertex_values, c * self.edge_values)

    __rmul__ = __mul__

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(
            self.grid,
            self.vertex_values + other.vertex_values,
            self.edge_values + other.edge_values,
        )

    def __sub__(self, other: "GridField") -> "GridField":
        return self + (-1.0) * other


def n_dofs(grid: Grid) -> int:
    return grid.n_vertices + grid.n_edges * grid.m


def edge_chains(grid: Grid) -> np.ndarray:
    """Flat node indices along each edge, tail to head: shape ``(n_edges, m + 2)``."""
    nv = grid.n_vertices
    m = grid.m
    interior = nv + np.arange(grid.n_edges * m).reshape(grid.n_edges, m)
    return np.column_stack([grid.edge_tail, interior, grid.edge_head])


@lru_cache(maxsize=16)
def _operators(spec: GridSpec):
    grid = build_grid(spec)
    chains = edge_chains(grid)
    a = chains[:, :-1].ravel()
    b = chains[:, 1:].ravel()
    n = n_dofs(grid)
    h = grid.h
    weights = np.zeros(n)
    np.add.at(weights, a, 0.5 * h)
    np.add.at(weights, b, 0.5 * h)
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([np.ones(a.size), np.ones(a.size), -np.ones(a.size), -np.ones(a.size)])
    K = sp.csr_matrix((vals / h, (rows, cols)), shape=(n, n))
    K.sum_duplicates()
    return weights, K, a, b


def lumped_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights: ``h`` per edge sample, ``deg * h / 2`` per vertex."""
    return _operators(grid.spec)[0]


def stiffness(grid: Grid) -> sp.csr_matrix:
    """Matrix of the quadratic form ``||u'||^2`` on flat fields."""
    return _operators(grid.spec)[1]


def norm_r(u: GridField, r: float) -> float:
    if r < 1:
        raise ValueError(f"norm exponent must be >= 1, got {r}")
    w = lumped_weights(u.grid)
    return float(np.sum(w * np.abs(u.flat()) ** r) ** (1.0 / r))


def mass(u: GridField) -> float:
    return float(np.sum(lumped_weights(u.grid) * u.flat() ** 2))


def derivative_sq(u: GridField) -> float:
    _, _, a, b = _operators(u.grid.spec)
    x = u.flat()
    return float(np.sum((x[b] - x[a]) ** 2) / u.grid.h)


def inner(u: GridField, v: GridField) -> float:
    return float(np.sum(lumped_weights(u.grid) * u.flat() * v.flat()))


def restrict_profile(f, grid: Grid) -> GridField:
    """Sample ``f(x, y)`` (vectorised) at every vertex and edge sample point."""
    vx, vy = grid.vertex_xy.T
    s = grid.sample_xy
    vv = np.broadcast_to(np.asarray(f(vx, vy), dtype=float), vx.shape)
    ev = np.broadcast_to(np.asarray(f(s[..., 0], s[..., 1]), dtype=float), s.shape[:2])
    return GridField(grid, vv.copy(), ev.copy())


def rotate90(u: GridField) -> GridField:
    """Image of ``u`` under the grid automorphism ``(x, y) -> (-y, x)``."""
    vperm, eperm, flip = rotation_permutation(u.grid)
    ev = u.edge_values[eperm].copy()
    ev[flip] = ev[flip, ::-1]
    return GridField(u.grid, u.vertex_values[vperm], ev)


def dump_field(u: GridField, path) -> None:
    """Write ``u`` as a text header line followed by raw little-endian doubles."""
    s = u.spec
    header = f"gridfield epsilon={s.epsilon!r} W={s.window} m={s.m}\n"
    with open(Path(path), "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(u.vertex_array().astype("<f8").tobytes(order="C"))
        fh.write(u.edge_values.astype("<f8").tobytes(order="C"))


def load_field(path) -> GridField:
    with open(Path(path), "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if not header or header[0] != "gridfield":
            raise ValueError(f"{path} is not a grid field dump")
        kv = dict(item.split("=", 1) for item in header[1:])
        spec = GridSpec(float(kv["epsilon"]), int(kv["W"]), int(kv["m"]))
        data = np.frombuffer(fh.read(), dtype="<f8")
    grid = build_grid(spec)
    nv = grid.n_vertices
    if data.size != nv + grid.n_edges * grid.m:
        raise ValueError(f"{path} has {data.size} values, expected {nv + grid.n_edges * grid.m}")
    return GridField(grid, data[:nv].copy(), data[nv:].reshape(grid.n_edges, grid.m).copy())
