import numpy as np
import pytest

from gridnls import periodic as ps
from gridnls.grid import GridSpec, build_grid

Z2 = ps.VertexSetSpec.z2_periodic([(0, 0)], (1, 0), (0, 1))


def test_unit_lattice_cell():
    cell = ps.build_cell(Z2)
    assert cell.q0_cells == ((0, 0),)
    assert cell.v0 == ((0, 0),)
    assert cell.n_vertices_q0 == 1 and cell.n_v0 == 1


def brute_force_classes(vectors, k):
    (a, b), (c, d) = vectors
    pts = [(i, j) for i in range(-k, k) for j in range(-k, k)]
    classes = []
    for p in pts:
        for cl in classes:
            q = cl[0]
            # solve p - q = s v1 + t v2 over the integers
            dx, dy = p[0] - q[0], p[1] - q[1]
            det = a * d - b * c
            s, t = (d * dx - c * dy) / det, (-b * dx + a * dy) / det
            if s == int(s) and t == int(t):
                cl.append(p)
                break
        else:
            classes.append([p])
    return classes


def test_two_by_one_lattice():
    spec = ps.VertexSetSpec.z2_periodic([(0, 0)], (2, 0), (0, 1))
    cell = ps.build_cell(spec)
    assert len(brute_force_classes(spec.vectors, 2)) == 2
    assert cell.n_vertices_q0 == 2
    assert cell.v0 == ((0, 0),)
    assert cell.n_vertices_q0 / cell.n_v0 == 2
    assert ps.check_tiling(spec, cell, 6)


@pytest.mark.parametrize("vectors", [((2, 1), (-1, 2)), ((3, 0), (1, 2)), ((1, 1), (1, -1))])
def test_cell_matches_brute_force(vectors):
    spec = ps.VertexSetSpec.z2_periodic([(0, 0)], *vectors)
    cell = ps.build_cell(spec)
    (a, b), (c, d) = vectors
    k = abs(a * d - b * c)
    assert cell.n_vertices_q0 == len(brute_force_classes(vectors, k)) == k
    assert ps.check_tiling(spec, cell, 8)


def test_representatives_are_closest_with_lexicographic_ties():
    spec = ps.VertexSetSpec.z2_periodic([(0, 0)], (2, 0), (0, 2))
    cell = ps.build_cell(spec)
    # the class of (1, 0) also holds (-1, 0); lexicographic order keeps (-1, 0)
    assert (-1, 0) in cell.q0_cells and (1, 0) not in cell.q0_cells


def test_diagonal_line_cell_and_tiling():
    spec = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 1))
    cell = ps.build_cell(spec)
    assert cell.v0 == ((0, 0),)
    assert ps.check_tiling(spec, cell, 4)


def test_rejects_dependent_vectors():
    with pytest.raises(ValueError, match="linearly dependent"):
        ps.VertexSetSpec.z2_periodic([(0, 0)], (1, 2), (2, 4))


def test_rejects_base_inconsistent_with_period():
    with pytest.raises(ValueError, match="inconsistent"):
        ps.VertexSetSpec.z_periodic([(0, 0), (2, 0)], (1, 0))


def test_transverse_bound_is_tight():
    spec = ps.VertexSetSpec.z_periodic([(0, 0), (0, 3)], (1, 0))
    t = spec.transverse(np.array(spec.base))
    assert spec.r == pytest.approx(1.5)
    assert np.max(np.abs(t)) == pytest.approx(spec.r)


def test_materialize_examples():
    g = build_grid(GridSpec(0.7, 3, 1))
    assert g.vertex_ij[ps.materialize(ps.VertexSetSpec.finite([(0, 0)]), g)].tolist() == [[0, 0]]
    line = ps.materialize(ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0)), g)
    assert len(line) == 7 and np.all(g.vertex_ij[line, 1] == 0)
    g2 = build_grid(GridSpec(1.0, 2, 1))
    assert len(ps.materialize(Z2, g2)) == 25


def test_materialize_scale_consistency():
    spec = ps.VertexSetSpec.z2_periodic([(0, 0), (1, 0)], (3, 1), (0, 2))
    a = build_grid(GridSpec(1.0, 5, 1))
    b = build_grid(GridSpec(0.3, 5, 1))
    np.testing.assert_allclose(b.vertex_xy[ps.materialize(spec, b)],
                               0.3 * a.vertex_xy[ps.materialize(spec, a)])


def test_strip_sets():
    base = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0))
    assert sorted(y for _, y in ps.build_strip_set(base, 1.0, 1.0).base) == [-1, 0, 1]
    assert sorted(y for _, y in ps.build_strip_set(base, 1.0, 0.5).base) == [-2, -1, 0, 1, 2]
    diag = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 1))
    s = ps.build_strip_set(diag, 1.0, 0.5)
    assert sorted(s.base) == sorted((-i, i) for i in range(-2, 3))
    g = build_grid(GridSpec(1.0, 6, 1))
    idx = ps.materialize(s, g)
    assert len(set(idx.tolist())) == len(idx)


def test_strip_narrower_than_epsilon_is_the_line():
    base = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0))
    g = build_grid(GridSpec(0.5, 6, 1))
    strip = ps.build_strip_set(base, 0.4, 0.5)
    np.testing.assert_array_equal(ps.materialize(strip, g), ps.materialize(base, g))


def test_beta_scalings():
    assert ps.beta_for_theorem(ps.Z2, ps.build_cell(Z2), (1, 0), 0.1) == (0.5, 0.1)
    line = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0))
    assert ps.beta_for_theorem(ps.ZLINE, ps.build_cell(line), (1, 0), 0.3) == (0.5, 1.0)
    diag = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 1))
    a, b = ps.beta_for_theorem(ps.ZLINE, ps.build_cell(diag), (1, 1), 0.3)
    assert a == 0.5 and b == pytest.approx(np.sqrt(2))
    assert ps.beta_for_theorem(ps.Z2, ps.build_cell(Z2), (1, 0), 0.25)[1] == 0.25
