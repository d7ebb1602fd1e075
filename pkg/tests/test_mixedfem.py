import numpy as np
import pytest

from polywhitney import mixedfem
from polywhitney.meshgen import MeshSpec


def linear_problem():
    return mixedfem.make_problem(
        u=lambda x: x[..., 0] + 2 * x[..., 1],
        p=lambda x: np.broadcast_to([1.0, 2.0], x.shape).copy(),
        f=lambda x: np.zeros(x.shape[:-1]),
        name="linear",
    )


@pytest.mark.parametrize("family, tol", [("quad", 1e-9), ("hexdual", 1e-9), ("cvt", 1e-6)])
def test_patch_test_recovers_linear_solution(family, tol):
    # cvt cells have short edges, which puts basis poles near the cell and
    # limits the mass-matrix quadrature; see the README notes
    mesh = MeshSpec(family, 4).build()
    system, sol, err = mixedfem.solve_problem(mesh, linear_problem())
    assert err.p < tol
    assert err.div_p < 1e-12
    assert sol.residual < 1e-12


def finite_difference_checks(problem, x, h=1e-5):
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    grad = np.stack([(problem.u(x + ex) - problem.u(x - ex)), (problem.u(x + ey) - problem.u(x - ey))], -1) / (2 * h)
    div = ((problem.p(x + ex)[..., 0] - problem.p(x - ex)[..., 0])
           + (problem.p(x + ey)[..., 1] - problem.p(x - ey)[..., 1])) / (2 * h)
    return grad, div


@pytest.mark.parametrize("name", sorted(mixedfem.PROBLEMS))
def test_manufactured_problems_are_consistent(name, rng):
    prob = mixedfem.get_problem(name)
    x = rng.uniform(0.05, 0.95, size=(50, 2))
    grad, div = finite_difference_checks(prob, x)
    np.testing.assert_allclose(grad, prob.p(x), atol=1e-7)
    np.testing.assert_allclose(div, prob.div_p(x), atol=1e-5)


def test_smooth_problem_has_zero_boundary_values():
    prob = mixedfem.get_problem("smooth")
    s = np.linspace(0, 1, 11)
    for pts in (np.column_stack([s, 0 * s]), np.column_stack([s, 0 * s + 1]), np.column_stack([0 * s + 1, s])):
        np.testing.assert_allclose(prob.u(pts), 0.0, atol=1e-15)


def test_rough_flux_is_singular_at_origin():
    prob = mixedfem.get_problem("rough")
    r = np.array([1e-2, 1e-4])
    mags = np.linalg.norm(prob.p(np.column_stack([r, r])), axis=1)
    # |p| ~ r^{-1/2}
    assert mags[1] / mags[0] == pytest.approx(10.0, rel=0.05)


@pytest.fixture(scope="module")
def hex_system():
    mesh = MeshSpec("hexdual", 4).build()
    prob = mixedfem.get_problem("smooth")
    system = mixedfem.assemble(mesh, prob.f, prob.g)
    return system, mixedfem.solve(system), prob


def test_system_structure(hex_system):
    system, _, _ = hex_system
    M = system.M.toarray()
    np.testing.assert_allclose(M, M.T, atol=1e-14)
    assert np.linalg.eigvalsh(M).min() > 0
    col = np.asarray(system.B.sum(axis=0)).ravel()
    interior = np.setdiff1d(np.arange(system.dofs.n_edges), system.mesh.boundary_edges)
    np.testing.assert_allclose(col[interior], 0.0, atol=1e-14)
    assert system.matrix.shape == (system.dofs.size, system.dofs.size)


def test_discrete_divergence_matches_cell_means(hex_system):
    system, sol, prob = hex_system
    areas = np.array([d.basis.poly.area for d in system.cells])
    np.testing.assert_allclose(mixedfem.cell_divergence(system, sol), -system.F / areas, atol=1e-10)


def test_flux_is_continuous_across_edges(hex_system):
    system, sol, _ = hex_system
    mesh = system.mesh
    for e in range(mesh.n_edges):
        c0, c1 = mesh.edge_cells[e]
        if c1 < 0:
            continue
        a, b = mesh.vertices[mesh.edges[e]]
        t = (b - a) / np.linalg.norm(b - a)
        n = np.array([t[1], -t[0]])
        mid = 0.5 * (a + b)
        f0 = mixedfem.flux_values(system, sol, c0, mid[None] + 1e-7 * (mesh.polygon(c0).centroid - mid)) @ n
        f1 = mixedfem.flux_values(system, sol, c1, mid[None] + 1e-7 * (mesh.polygon(c1).centroid - mid)) @ n
        assert f0[0] == pytest.approx(f1[0], abs=1e-5)


def test_errors_decrease_with_refinement():
    rep = mixedfem.convergence_study("quad", [4, 8])
    a, b = rep.levels
    assert b.err.p < a.err.p and b.err.u < a.err.u and b.err.div_p < a.err.div_p
    assert rep.final_orders()["u"] > 0.8


def test_report_csv_columns():
    rep = mixedfem.convergence_study("quad", [2, 4], problem="rough")
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "N,h,err_p,ord_p,err_u,ord_u"
    assert lines[1].split(",")[3] == ""
    assert len(lines) == 3
    full = mixedfem.convergence_study("quad", [2, 4]).to_csv().splitlines()[0]
    assert full == "N,h,err_p,ord_p,err_divp,ord_divp,err_u,ord_u"


def test_unknown_problem():
    with pytest.raises(KeyError, match="unknown problem"):
        mixedfem.get_problem("wavy")
