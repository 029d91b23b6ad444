"""Sets of nonlinear vertices: finite, Z-periodic and Z^2-periodic.

Sets are described on the unit grid and scaled by epsilon when materialised.
For periodic sets the periodicity cell ``(Q0, V0)`` is built by grouping the
vertices of ``Z^2 ∩ [-k, k)^2`` into lattice cosets and keeping, for every
coset, the member closest to the origin (ties broken lexicographically).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import floor, hypot

import numpy as np

from .grid import Grid

FINITE = "finite"
Z_PERIODIC = "z"
Z2_PERIODIC = "z2"

Z2 = "Z2"
ZLINE = "ZLine"
ZSTRIP = "ZStrip"


def _as_points(points) -> tuple[tuple[int, int], ...]:
    out = []
    for p in points:
        a, b = p
        if int(a) != a or int(b) != b:
            raise ValueError(f"vertex coordinates must be integers, got {p}")
        out.append((int(a), int(b)))
    return tuple(out)


def _as_vector(v, name) -> tuple[int, int]:
    (a, b), = _as_points([v])
    if a == 0 and b == 0:
        raise ValueError(f"{name} must be a nonzero integer vector")
    return a, b


@dataclass(frozen=True)
class VertexSetSpec:
    """Nonlinear vertex set on the unit grid.

    ``base`` holds one representative per period; the set is ``base`` itself
    (finite), ``base + Z v`` (Z-periodic) or ``base + Z v1 + Z v2``
    (Z^2-periodic).
    """

    kind: str
    base: tuple[tuple[int, int], ...]
    vectors: tuple[tuple[int, int], ...] = ()
    p0: tuple[float, float] | None = field(default=None, compare=False)
    r: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "base", _as_points(self.base))
        vecs = tuple(_as_vector(v, "generating vector") for v in self.vectors)
        object.__setattr__(self, "vectors", vecs)
        if self.kind == FINITE:
            if vecs:
                raise ValueError("finite vertex sets take no generating vectors")
            if len(set(self.base)) != len(self.base):
                raise ValueError("finite vertex set lists a vertex twice")
            return
        if not self.base:
            raise ValueError("periodic vertex sets need a nonempty base list")
        if self.kind == Z_PERIODIC:
            if len(vecs) != 1:
                raise ValueError("Z-periodic sets take exactly one generating vector")
            (v,) = vecs
            perp = np.array([-v[1], v[0]])
            c = np.array(self.base) @ perp
            lo, hi = float(c.min()), float(c.max())
            mid = 0.5 * (lo + hi)
            p0 = tuple(mid * perp / float(perp @ perp))
            object.__setattr__(self, "p0", p0)
            object.__setattr__(self, "r", 0.5 * (hi - lo))
        elif self.kind == Z2_PERIODIC:
            if len(vecs) != 2:
                raise ValueError("Z^2-periodic sets take exactly two generating vectors")
            (a, b), (c, d) = vecs
            if a * d - b * c == 0:
                raise ValueError(f"generating vectors {vecs} are linearly dependent")
        else:
            raise ValueError(f"unknown vertex set kind {self.kind!r}")
        keys = [self.coset_key(p) for p in self.base]
        if len(set(keys)) != len(keys):
            raise ValueError(
                "base list is inconsistent with the claimed periodicity: "
                "two base vertices differ by a period"
            )

    @classmethod
    def finite(cls, points) -> "VertexSetSpec":
        return cls(FINITE, tuple(points))

    @classmethod
    def z_periodic(cls, base, v) -> "VertexSetSpec":
        return cls(Z_PERIODIC, tuple(base), (tuple(v),))

    @classmethod
    def z2_periodic(cls, base, v1, v2) -> "VertexSetSpec":
        return cls(Z2_PERIODIC, tuple(base), (tuple(v1), tuple(v2)))

    def coset_key(self, point) -> tuple[int, int]:
        """Label of the translation class of ``point`` (equal labels iff equivalent)."""
        x, y = point
        if self.kind == Z2_PERIODIC:
            (a, b), (c, d) = self.vectors
            k = abs(a * d - b * c)
            # adj(B) @ w is divisible by det(B) exactly for lattice vectors w
            return ((d * x - c * y) % k, (-b * x + a * y) % k)
        if self.kind == Z_PERIODIC:
            (v1, v2), = self.vectors
            return (v1 * y - v2 * x, (v1 * x + v2 * y) % (v1 * v1 + v2 * v2))
        raise ValueError("finite sets have no translation classes")

    def contains(self, ij: np.ndarray) -> np.ndarray:
        """Membership mask for integer points ``ij`` of shape (n, 2)."""
        ij = np.asarray(ij, dtype=np.int64).reshape(-1, 2)
        mask = np.zeros(len(ij), dtype=bool)
        x, y = ij[:, 0], ij[:, 1]
        for bx, by in self.base:
            dx, dy = x - bx, y - by
            if self.kind == FINITE:
                mask |= (dx == 0) & (dy == 0)
            elif self.kind == Z_PERIODIC:
                (v1, v2), = self.vectors
                n2 = v1 * v1 + v2 * v2
                mask |= (v1 * dy - v2 * dx == 0) & ((v1 * dx + v2 * dy) % n2 == 0)
            else:
                (a, b), (c, d) = self.vectors
                k = a * d - b * c
                mask |= ((d * dx - c * dy) % k == 0) & ((-b * dx + a * dy) % k == 0)
        return mask

    @property
    def vector(self) -> tuple[int, int]:
        if self.kind != Z_PERIODIC:
            raise ValueError("only Z-periodic sets have a single generating vector")
        return self.vectors[0]

    def transverse(self, ij: np.ndarray) -> np.ndarray:
        """``(P - P0) . v_perp`` for Z-periodic sets."""
        v1, v2 = self.vector
        perp = np.array([-v2, v1], dtype=float)
        return (np.asarray(ij, dtype=float) - np.asarray(self.p0)) @ perp


@dataclass(frozen=True)
class PeriodicityCell:
    q0_cells: tuple[tuple[int, int], ...]
    v0: tuple[tuple[int, int], ...]

    @property
    def n_vertices_q0(self) -> int:
        # every L-cell carries exactly one vertex
        return len(self.q0_cells)

    @property
    def n_v0(self) -> int:
        return len(self.v0)


def _closest(points) -> tuple[int, int]:
    return min(points, key=lambda p: (p[0] * p[0] + p[1] * p[1], p[0], p[1]))


def build_cell(spec: VertexSetSpec) -> PeriodicityCell:
    if spec.kind == Z2_PERIODIC:
        (a, b), (c, d) = spec.vectors
        k = abs(a * d - b * c)
        candidates = [(i, j) for i in range(-k, k) for j in range(-k, k)]
    elif spec.kind == Z_PERIODIC:
        v = spec.vector
        r = spec.r
        reach = int(np.ceil(r + hypot(*spec.p0) + 2 * hypot(*v))) + 2
        pts = np.array(
            [(i, j) for i in range(-reach, reach + 1) for j in range(-reach, reach + 1)]
        )
        keep = np.abs(spec.transverse(pts)) <= r + 1e-9
        candidates = [tuple(map(int, p)) for p in pts[keep]]
    else:
        raise ValueError("a periodicity cell needs a Z- or Z^2-periodic set")

    classes: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for p in candidates:
        classes.setdefault(spec.coset_key(p), []).append(p)
    reps = sorted(_closest(members) for members in classes.values())
    in_v = spec.contains(np.array(reps))
    v0 = tuple(p for p, flag in zip(reps, in_v) if flag)
    if not v0:
        raise ValueError("periodicity cell contains no vertex of the set")
    return PeriodicityCell(tuple(reps), v0)


def materialize(spec: VertexSetSpec, grid: Grid) -> np.ndarray:
    """Flat indices of the nonlinear vertices ``epsilon * V`` inside the window."""
    mask = spec.contains(grid.vertex_ij)
    return np.flatnonzero(mask)


def build_strip_set(base: VertexSetSpec, R: float, epsilon: float) -> VertexSetSpec:
    """Union of the translates ``V + i v_perp`` with ``|i epsilon| <= R`` (unit-grid description)."""
    if base.kind != Z_PERIODIC:
        raise ValueError("strip sets are built from a Z-periodic base set")
    if not R > 0:
        raise ValueError(f"strip half-width R must be positive, got {R}")
    v1, v2 = base.vector
    perp = (-v2, v1)
    imax = floor(R / epsilon + 1e-9)
    pts = []
    for i in range(-imax, imax + 1):
        pts.extend((bx + i * perp[0], by + i * perp[1]) for bx, by in base.base)
    return VertexSetSpec.z_periodic(pts, base.vector)


def beta_for_theorem(case: str, cell: PeriodicityCell, v, epsilon: float) -> tuple[float, float]:
    """``(alpha, beta)`` prescribed for the singular-limit regimes.

    ``Z2`` and ``ZStrip`` use ``#(vertices of Q0) / #V0 * epsilon``;
    ``ZLine`` uses ``|v| / #V0``.
    """
    alpha = 0.5
    if case in (Z2, ZSTRIP):
        return alpha, cell.n_vertices_q0 / cell.n_v0 * epsilon
    if case == ZLINE:
        return alpha, hypot(*v) / cell.n_v0
    raise ValueError(f"unknown limit case {case!r}")


def check_tiling(spec: VertexSetSpec, cell: PeriodicityCell, window: int) -> bool:
    """Verify on the unit-grid window that translates of ``Q0`` tile and translates of ``V0`` give ``V``.

    Only L-cells whose east and north edges both lie inside the window are
    checked; for Z-periodic sets the tiled region is the strip graph.
    """
    W = window
    cells = np.array([(i, j) for i in range(-W, W) for j in range(-W, W)])
    if spec.kind == Z_PERIODIC:
        cells = cells[np.abs(spec.transverse(cells)) <= spec.r + 1e-9]
    rep_of = {spec.coset_key(p): p for p in cell.q0_cells}
    if len(rep_of) != len(cell.q0_cells):
        return False  # two representatives of one class: translates overlap
    for p in map(tuple, cells):
        if spec.coset_key(p) not in rep_of:
            return False
    # V recovery: a window vertex is in V iff its representative is in V0
    v0 = set(cell.v0)
    in_v = spec.contains(cells)
    from_cell = np.array([rep_of[spec.coset_key(tuple(p))] in v0 for p in cells])
    return bool(np.array_equal(in_v, from_cell))
