"""Doubly nonlinear energy on the grid, its gradient and Euler-Lagrange diagnostics.

    E(u) = 1/2 ||u'||^2 - alpha/p ||u||_p^p - beta/q sum_{v in V} |u(v)|^q

Window-boundary vertices are pinned to zero; everything else (interior
vertices and all edge samples) is a free degree of freedom.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GridField, edge_chains, lumped_weights, n_dofs, stiffness
from .grid import Grid


@dataclass(frozen=True)
class EnergyParams:
    p: float
    q: float
    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        problems = []
        if not 2 < self.p < 6:
            problems.append(f"p={self.p} outside the legal range (2,6)")
        if not 2 < self.q < 4:
            problems.append(f"q={self.q} outside the legal range (2,4)")
        if not self.alpha >= 0:
            problems.append(f"alpha={self.alpha} must be >= 0")
        if not self.beta >= 0:
            problems.append(f"beta={self.beta} must be >= 0")
        if not self.mu > 0:
            problems.append(f"mu={self.mu} must be > 0")
        if problems:
            raise ValueError("; ".join(problems))


@dataclass(frozen=True)
class ELResidual:
    pde_residual: float
    kirchhoff_residual: float
    delta_residual: float

    def as_dict(self) -> dict:
        return {
            "pde_residual": self.pde_residual,
            "kirchhoff_residual": self.kirchhoff_residual,
            "delta_residual": self.delta_residual,
        }


def _power(x, r):
    return np.abs(x) ** (r - 2) * x


class GridProblem:
    """Energy restricted to the free degrees of freedom, in the form the flow solver expects."""

    def __init__(self, grid: Grid, params: EnergyParams, vertices):
        self.grid = grid
        self.params = params
        self.vertices = np.asarray(vertices, dtype=int)
        n = n_dofs(grid)
        fixed = np.zeros(n, dtype=bool)
        fixed[: grid.n_vertices] = grid.boundary
        self.free = np.flatnonzero(~fixed)
        local = -np.ones(n, dtype=int)
        local[self.free] = np.arange(self.free.size)
        vloc = local[self.vertices]
        self.vset_local = vloc[vloc >= 0]
        self.weights = lumped_weights(grid)[self.free]
        self.stiffness = stiffness(grid)[self.free][:, self.free].tocsr()
        self._n = n

    @property
    def size(self) -> int:
        return self.free.size

    def energy(self, x: np.ndarray) -> float:
        p, q, a, b = self.params.p, self.params.q, self.params.alpha, self.params.beta
        kin = 0.5 * float(x @ (self.stiffness @ x))
        pot = a / p * float(np.sum(self.weights * np.abs(x) ** p))
        pt = b / q * float(np.sum(np.abs(x[self.vset_local]) ** q))
        return kin - pot - pt

    def euclidean_gradient(self, x: np.ndarray) -> np.ndarray:
        p, q, a, b = self.params.p, self.params.q, self.params.alpha, self.params.beta
        g = self.stiffness @ x - a * self.weights * _power(x, p)
        g[self.vset_local] -= b * _power(x[self.vset_local], q)
        return g

    def to_field(self, x: np.ndarray) -> GridField:
        full = np.zeros(self._n)
        full[self.free] = x
        return GridField.from_flat(self.grid, full)

    def from_field(self, u: GridField) -> np.ndarray:
        return u.flat()[self.free]

    def diagnostics(self, x: np.ndarray) -> ELResidual:
        return el_residual(self.to_field(x), self.params, self.vertices)


def energy(u: GridField, params: EnergyParams, vset) -> float:
    x = u.flat()
    w = lumped_weights(u.grid)
    kin = 0.5 * float(x @ (stiffness(u.grid) @ x))
    pot = params.alpha / params.p * float(np.sum(w * np.abs(x) ** params.p))
    pt = params.beta / params.q * float(np.sum(np.abs(x[np.asarray(vset, dtype=int)]) ** params.q))
    return kin - pot - pt


def gradient(u: GridField, params: EnergyParams, vset) -> GridField:
    """Gradient of :func:`energy` for the lumped L^2 inner product (all nodes, no pinning)."""
    x = u.flat()
    w = lumped_weights(u.grid)
    vset = np.asarray(vset, dtype=int)
    g = stiffness(u.grid) @ x - params.alpha * w * _power(x, params.p)
    np.subtract.at(g, vset, params.beta * _power(x[vset], params.q))
    return GridField.from_flat(u.grid, g / w)


def lagrange_multiplier(u: GridField, params: EnergyParams, vset) -> float:
    w = lumped_weights(u.grid)
    x = u.flat()
    m = float(np.sum(w * x * x))
    if m <= 0:
        raise ValueError("Lagrange multiplier undefined for the zero field")
    g = gradient(u, params, vset).flat()
    return -float(np.sum(w * g * x)) / m


def outgoing_derivatives(u: GridField) -> np.ndarray:
    """Per vertex, the sum over incident edges of the one-sided derivative pointing away from it."""
    grid = u.grid
    x = u.flat()
    chains = edge_chains(grid)
    h = grid.h
    d_tail = (x[chains[:, 1]] - x[chains[:, 0]]) / h
    d_head = (x[chains[:, -2]] - x[chains[:, -1]]) / h
    s = np.zeros(grid.n_vertices)
    np.add.at(s, grid.edge_tail, d_tail)
    np.add.at(s, grid.edge_head, d_head)
    return s


def el_residual(u: GridField, params: EnergyParams, vset, lam: float | None = None) -> ELResidual:
    grid = u.grid
    x = u.flat()
    sup = float(np.max(np.abs(x))) if x.size else 0.0
    if sup == 0.0:
        return ELResidual(0.0, 0.0, 0.0)
    if lam is None:
        lam = lagrange_multiplier(u, params, vset)
    h = grid.h
    chains = edge_chains(grid)
    left, mid, right = x[chains[:, :-2]], x[chains[:, 1:-1]], x[chains[:, 2:]]
    neg_u2 = (2 * mid - left - right) / h**2
    pde = neg_u2 + lam * mid - params.alpha * _power(mid, params.p)
    pde_res = float(np.max(np.abs(pde))) / sup

    flux = outgoing_derivatives(u)
    vset = np.asarray(vset, dtype=int)
    in_v = np.zeros(grid.n_vertices, dtype=bool)
    in_v[vset] = True
    interior = ~grid.boundary
    kv = interior & ~in_v
    dv = interior & in_v
    kirch = float(np.max(np.abs(flux[kv]))) if kv.any() else 0.0
    vals = x[: grid.n_vertices]
    delta = flux[dv] + params.beta * _power(vals[dv], params.q)
    delta_res = float(np.max(np.abs(delta))) if dv.any() else 0.0
    return ELResidual(pde_res, kirch, delta_res)
