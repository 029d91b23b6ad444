import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from gridnls import periodic as ps
from gridnls.energy import (
    EnergyParams, GridProblem, el_residual, energy, gradient, lagrange_multiplier,
)
from gridnls.fields import GridField, derivative_sq, inner, lumped_weights, mass, norm_r
from gridnls.grid import GridSpec, build_grid, lcell_edges
from gridnls.properties import gradient_mismatch, mass_map_concavity, random_field

LINE = ps.VertexSetSpec.z_periodic([(0, 0)], (1, 0))


def test_params_report_every_violation():
    with pytest.raises(ValueError) as exc:
        EnergyParams(p=1.5, q=4.5, alpha=-1, beta=1, mu=0)
    msg = str(exc.value)
    for frag in ("p=1.5", "(2,6)", "q=4.5", "(2,4)", "alpha", "mu"):
        assert frag in msg


def test_zero_field_has_zero_energy_and_gradient():
    g = build_grid(GridSpec(1.0, 2, 2))
    u = GridField.zeros(g)
    params = EnergyParams(3.0, 3.0)
    assert energy(u, params, [0]) == 0.0
    assert np.all(gradient(u, params, [0]).flat() == 0.0)


def test_tent_energy_against_closed_forms():
    eps, m, A, p = 0.8, 7, 1.3, 3.0
    g = build_grid(GridSpec(eps, 1, m))
    e = lcell_edges(0, 0, g)[0]
    s = np.arange(1, m + 1) / (m + 1)
    u = GridField.zeros(g)
    u.edge_values[e] = A * (1 - np.abs(2 * s - 1))
    params = EnergyParams(p, 2.5, 1.0, 1.0)
    # peak sits on a sample (m odd), so the kinetic term is exact: slope 2A/eps on length eps
    kin = 0.5 * 4 * A**2 / eps
    nodes = np.concatenate([[0.0], u.edge_values[e], [0.0]])
    pot = np.trapezoid(np.abs(nodes) ** p, dx=eps / (m + 1)) / p
    assert energy(u, params, []) == pytest.approx(kin - pot, abs=1e-12)
    fine = build_grid(GridSpec(eps, 1, 2001))
    uf = GridField.zeros(fine)
    sf = np.arange(1, 2002) / 2002
    uf.edge_values[e] = A * (1 - np.abs(2 * sf - 1))
    assert norm_r(uf, p) ** p == pytest.approx(A**p * eps / (p + 1), rel=1e-5)


def test_single_vertex_delta_term():
    g = build_grid(GridSpec(1.0, 2, 1))
    u = GridField.zeros(g)
    v = int(g.vertex_index(0, 0))
    u.vertex_values[v] = 2.0
    params = EnergyParams(3.0, 3.0, alpha=0.0, beta=1.0)
    assert energy(u, params, [v]) - 0.5 * derivative_sq(u) == pytest.approx(-8 / 3)


def test_gradient_finite_difference():
    g = build_grid(GridSpec(1.0, 3, 2))
    vset = ps.materialize(LINE, g)
    rng = np.random.default_rng(5)
    params = EnergyParams(2.5, 2.5)
    worst = max(gradient_mismatch(random_field(g, rng), random_field(g, rng), params, vset)
                for _ in range(100))
    assert worst < 1e-6


def test_linear_gradient_is_the_laplacian():
    g = build_grid(GridSpec(0.5, 3, 2))
    u = random_field(g, np.random.default_rng(6))
    params = EnergyParams(3.0, 3.0, alpha=0.0, beta=0.0)
    gr = gradient(u, params, [])
    assert inner(gr, u) == pytest.approx(derivative_sq(u), rel=1e-12)


def dirichlet_ground_state(grid):
    prob = GridProblem(grid, EnergyParams(3.0, 3.0, 0.0, 0.0), [])
    vals, vecs = eigh(prob.stiffness.toarray(), np.diag(prob.weights))
    return prob, vals[0], prob.to_field(vecs[:, 0])


def test_multiplier_of_linear_eigenfield():
    g = build_grid(GridSpec(1.0, 3, 2))
    prob, lam1, u = dirichlet_ground_state(g)
    params = EnergyParams(3.0, 3.0, 0.0, 0.0)
    assert lagrange_multiplier(u, params, []) == pytest.approx(-lam1, rel=1e-10)
    assert lagrange_multiplier(u * 7.5, params, []) == pytest.approx(-lam1, rel=1e-10)
    gr = gradient(u, params, [])
    free = ~np.r_[g.boundary, np.zeros(g.n_edges * g.m, bool)]
    np.testing.assert_allclose((gr.flat() - lam1 * u.flat())[free], 0.0, atol=1e-9)


def test_multiplier_rejects_zero_field():
    g = build_grid(GridSpec(1.0, 2, 1))
    with pytest.raises(ValueError):
        lagrange_multiplier(GridField.zeros(g), EnergyParams(3.0, 3.0), [])


def test_residuals_of_linear_eigenfield():
    # samples satisfy the difference equation exactly; at a vertex the one-sided
    # flux balances the lumped-mass term deg*h/2*lambda*u(v)
    g = build_grid(GridSpec(1.0, 3, 2))
    prob, lam1, u = dirichlet_ground_state(g)
    params = EnergyParams(3.0, 3.0, 0.0, 0.0)
    res = el_residual(u, params, [])
    assert res.pde_residual < 1e-9
    interior = ~g.boundary
    expected = np.max(np.abs(lam1 * g.degree * g.h / 2 * u.vertex_values)[interior])
    assert res.kirchhoff_residual == pytest.approx(expected, rel=1e-8)
    assert res.delta_residual == 0.0


def test_residuals_of_zero_field():
    g = build_grid(GridSpec(1.0, 2, 1))
    r = el_residual(GridField.zeros(g), EnergyParams(3.0, 3.0), [0])
    assert r.as_dict() == {"pde_residual": 0.0, "kirchhoff_residual": 0.0, "delta_residual": 0.0}


def test_problem_matches_field_energy():
    g = build_grid(GridSpec(0.5, 3, 2))
    vset = ps.materialize(LINE, g)
    params = EnergyParams(3.5, 2.5, 0.7, 1.3)
    prob = GridProblem(g, params, vset)
    u = random_field(g, np.random.default_rng(8))
    assert prob.energy(prob.from_field(u)) == pytest.approx(energy(u, params, vset), rel=1e-12)
    full = gradient(u, params, vset).flat() * lumped_weights(g)
    np.testing.assert_allclose(prob.euclidean_gradient(prob.from_field(u)), full[prob.free], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(2.1, 5.9), st.floats(2.1, 3.9))
def test_energy_splitting_signs(seed, p, q):
    g = build_grid(GridSpec(1.0, 3, 2))
    u = random_field(g, np.random.default_rng(seed))
    vset = ps.materialize(LINE, g)
    kin = 0.5 * derivative_sq(u)
    E_full = energy(u, EnergyParams(p, q, 1.0, 1.0), vset)
    E_no_delta = energy(u, EnergyParams(p, q, 1.0, 0.0), vset)
    E_kin = energy(u, EnergyParams(p, q, 0.0, 0.0), vset)
    assert kin >= 0 and E_kin == pytest.approx(kin)
    assert E_no_delta <= E_kin and E_full <= E_no_delta


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(2.1, 5.9), st.floats(2.1, 3.9))
def test_mass_map_is_concave(seed, p, q):
    g = build_grid(GridSpec(1.0, 3, 1))
    u = random_field(g, np.random.default_rng(seed))
    worst = mass_map_concavity(u, EnergyParams(p, q), ps.materialize(LINE, g), np.linspace(0.05, 5, 15))
    assert worst <= 1e-12
