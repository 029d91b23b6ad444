"""Truncated square metric grid with edge length epsilon.

Vertices sit at ``epsilon * (i, j)`` for ``|i|, |j| <= W``.  Edges are oriented
west->east (horizontal) and south->north (vertical) and each carries ``m``
equally spaced interior sample points, so the sample step on every edge is
``h = epsilon / (m + 1)``.

Vertex ``(i, j)`` has flat index ``(i + W) * (2W + 1) + (j + W)``.  Horizontal
edges come first (ordered by tail vertex index), vertical edges after.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

HORIZONTAL = 0
VERTICAL = 1


@dataclass(frozen=True)
class GridSpec:
    epsilon: float
    window: int
    m: int = 1

    def __post_init__(self):
        problems = []
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            problems.append(f"epsilon must be positive, got {self.epsilon}")
        if int(self.window) != self.window or self.window < 1:
            problems.append(f"window must be an integer >= 1, got {self.window}")
        if int(self.m) != self.m or self.m < 1:
            problems.append(f"m must be an integer >= 1, got {self.m}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def side(self) -> int:
        return 2 * self.window + 1

    @property
    def n_vertices(self) -> int:
        return self.side**2

    @property
    def n_edges(self) -> int:
        return 2 * self.side * 2 * self.window

    @property
    def h(self) -> float:
        return self.epsilon / (self.m + 1)


@dataclass(frozen=True)
class LCell:
    """Vertex ``epsilon*(i, j)`` together with its east and north edges."""

    i: int
    j: int


@dataclass(frozen=True, eq=False)
class Grid:
    spec: GridSpec
    vertex_ij: np.ndarray = field(repr=False)
    edge_tail: np.ndarray = field(repr=False)
    edge_head: np.ndarray = field(repr=False)
    edge_dir: np.ndarray = field(repr=False)

    @property
    def epsilon(self) -> float:
        return self.spec.epsilon

    @property
    def window(self) -> int:
        return self.spec.window

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def h(self) -> float:
        return self.spec.h

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_ij)

    @property
    def n_edges(self) -> int:
        return len(self.edge_tail)

    def vertex_index(self, i, j):
        """Flat index of vertex ``(i, j)``; -1 where outside the window."""
        W = self.window
        i = np.asarray(i)
        j = np.asarray(j)
        inside = (np.abs(i) <= W) & (np.abs(j) <= W)
        idx = (i + W) * self.spec.side + (j + W)
        return np.where(inside, idx, -1)

    def edge_index(self, direction: int, i, j):
        """Flat index of the edge leaving ``(i, j)`` east (0) or north (1); -1 if absent."""
        W = self.window
        n = self.spec.side
        i = np.asarray(i)
        j = np.asarray(j)
        if direction == HORIZONTAL:
            ok = (i >= -W) & (i < W) & (np.abs(j) <= W)
            idx = (i + W) * n + (j + W)
        else:
            ok = (j >= -W) & (j < W) & (np.abs(i) <= W)
            idx = 2 * W * n + (i + W) * (2 * W) + (j + W)
        return np.where(ok, idx, -1)

    @cached_property
    def degree(self) -> np.ndarray:
        return np.bincount(
            np.concatenate([self.edge_tail, self.edge_head]), minlength=self.n_vertices
        )

    @cached_property
    def incidence(self) -> list[list[tuple[int, int]]]:
        """Per vertex, the incident ``(edge, end)`` pairs; end is 0 at the tail, 1 at the head."""
        inc: list[list[tuple[int, int]]] = [[] for _ in range(self.n_vertices)]
        for e, (t, hd) in enumerate(zip(self.edge_tail, self.edge_head)):
            inc[t].append((e, 0))
            inc[hd].append((e, 1))
        return inc

    @cached_property
    def boundary(self) -> np.ndarray:
        W = self.window
        ij = self.vertex_ij
        return (np.abs(ij[:, 0]) == W) | (np.abs(ij[:, 1]) == W)

    @cached_property
    def vertex_xy(self) -> np.ndarray:
        return self.epsilon * self.vertex_ij.astype(float)

    @cached_property
    def sample_xy(self) -> np.ndarray:
        """Coordinates of the interior edge samples, shape ``(n_edges, m, 2)``."""
        start = self.vertex_xy[self.edge_tail]
        steps = self.h * np.arange(1, self.m + 1)
        unit = np.zeros((self.n_edges, 2))
        unit[self.edge_dir == HORIZONTAL, 0] = 1.0
        unit[self.edge_dir == VERTICAL, 1] = 1.0
        return start[:, None, :] + steps[None, :, None] * unit[:, None, :]

    def lcell_edges(self, i: int, j: int) -> tuple[int, ...]:
        return lcell_edges(i, j, self)


def build_grid(spec: GridSpec) -> Grid:
    W = spec.window
    n = spec.side
    r = np.arange(-W, W + 1)
    I, J = np.meshgrid(r, r, indexing="ij")
    vertex_ij = np.stack([I.ravel(), J.ravel()], axis=1)

    idx = np.arange(n * n).reshape(n, n)
    h_tail = idx[:-1, :].ravel()
    h_head = idx[1:, :].ravel()
    v_tail = idx[:, :-1].ravel()
    v_head = idx[:, 1:].ravel()
    edge_tail = np.concatenate([h_tail, v_tail])
    edge_head = np.concatenate([h_head, v_head])
    edge_dir = np.concatenate(
        [np.full(h_tail.size, HORIZONTAL), np.full(v_tail.size, VERTICAL)]
    )
    return Grid(spec, vertex_ij, edge_tail, edge_head, edge_dir)


def lcell_edges(i: int, j: int, grid: Grid) -> tuple[int, ...]:
    """Edges of ``L_{i,j}``: the east edge then the north edge, omitting those outside the window."""
    out = []
    for d in (HORIZONTAL, VERTICAL):
        e = int(grid.edge_index(d, i, j))
        if e >= 0:
            out.append(e)
    return tuple(out)


def rotation_permutation(grid: Grid):
    """Index maps realising the automorphism ``(i, j) -> (-j, i)``.

    Returns ``(vperm, eperm, flip)`` such that the rotated field has vertex
    value ``u[vperm[k]]`` at vertex ``k`` and edge samples ``u_e[eperm[e]]`` at
    edge ``e``, reversed where ``flip[e]`` is true.
    """
    ij = grid.vertex_ij
    # value at (i, j) comes from the preimage (j, -i)
    vperm = grid.vertex_index(ij[:, 1], -ij[:, 0])
    eperm = np.empty(grid.n_edges, dtype=int)
    flip = np.zeros(grid.n_edges, dtype=bool)
    ti, tj = ij[grid.edge_tail, 0], ij[grid.edge_tail, 1]
    hor = grid.edge_dir == HORIZONTAL
    # east edge (i,j)->(i+1,j) is the image of the north edge (j,-i-1)->(j,-i), traversed backwards
    eperm[hor] = grid.edge_index(VERTICAL, tj[hor], -ti[hor] - 1)
    flip[hor] = True
    # north edge (i,j)->(i,j+1) is the image of the east edge (j,-i)->(j+1,-i)
    eperm[~hor] = grid.edge_index(HORIZONTAL, tj[~hor], -ti[~hor])
    return vperm, eperm, flip
