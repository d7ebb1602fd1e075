import numpy as np
import pytest

from polywhitney import elem3d, gbc
from polywhitney.polymesh import DomainError, make_polyhedron
from polywhitney.shapes import get_shape

from conftest import ALL_SHAPES, interior_points

EXPECTED_TYPE = {
    "tetrahedron": "TypeI",
    "pyramid": "TypeI",
    "prism": "TypeI",
    "cube": "TypeII",
    "octahedron": "TypeII",
    "parallelepiped": "TypeII",
}


def skew_bipyramid():
    # triangle base with two apexes; the apex-apex segment is interior
    v = [(0, 0, 0), (1, 0, 0), (0.2, 0.9, 0), (0.3, 0.4, 0.8), (0.5, 0.2, -0.6)]
    faces = [(0, 1, 3), (1, 2, 3), (2, 0, 3), (1, 0, 4), (2, 1, 4), (0, 2, 4)]
    return make_polyhedron(v, faces)


def div_fd(func, x, h):
    out = 0.0
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        out = out + (func(x + e)[..., k] - func(x - e)[..., k]) / (2 * h)
    return out


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_duality(name, elements):
    el = elements(name)
    rep = elem3d.verify_duality(el.hdiv, el.hcurl)
    assert rep.face_residual < 1e-6
    assert rep.edge_residual < 1e-6
    assert rep.passed()


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_exactness(name, elements):
    el = elements(name)
    rep = elem3d.check_exactness(el.hdiv, el.hcurl)
    assert rep.dims == rep.expected
    assert rep.exact, rep.as_dict()


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_hdiv_divergence_is_constant(name, elements, rng):
    el = elements(name)
    p = el.poly
    x = interior_points(p, 8, rng, shrink=0.6)
    d = div_fd(el.hdiv.evaluate, x, 1e-5 * p.diameter)
    np.testing.assert_allclose(d, np.broadcast_to(el.hdiv.divergence, d.shape), rtol=1e-6)
    np.testing.assert_allclose(el.hdiv.divergence, p.face_areas / p.volume)


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_type_classification(name):
    assert elem3d.classify_type(get_shape(name)) == EXPECTED_TYPE[name]


def test_skew_bipyramid_is_neither_type():
    p = skew_bipyramid()
    assert elem3d.classify_type(p) == "neither"
    sol = elem3d.check_typeII_solvability(p)
    assert not sol.solvable


@pytest.mark.parametrize("name", ["cube", "octahedron", "parallelepiped"])
@pytest.mark.parametrize("a", [(1, 1, 1), (0.3, -2.0, 0.5)])
def test_type_ii_face_system_is_solvable(name, a):
    sol = elem3d.check_typeII_solvability(get_shape(name), a=a)
    assert sol.solvable
    assert sol.reconstruction_residual < 1e-12


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_lowest_order_polynomials_included(name, elements):
    el = elements(name)
    res = elem3d.check_p1minus_inclusion(el.hdiv, el.hcurl)
    assert res["hcurl"].max() < 1e-8
    assert res["hdiv"].max() < 1e-8


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_tangential_trace_matches_scaled_edge_form(name, elements):
    assert elem3d.check_tangential_trace(elements(name).hcurl) < 1e-6


def test_tetrahedron_edge_basis_is_scaled_whitney(rng):
    p = get_shape("tetrahedron")
    el = elem3d.build_elements(p)
    x = interior_points(p, 20, rng)
    lam = gbc.affine_coordinates(p.vertices, x)
    G = np.linalg.inv(np.vstack([np.ones(4), p.vertices.T]))[:, 1:]
    vals = el.hcurl.evaluate(x)
    for k, (a, b) in enumerate(el.adjacency.edges):
        length = np.linalg.norm(p.vertices[b] - p.vertices[a])
        ref = length * (lam[:, [a]] * G[b] - lam[:, [b]] * G[a])
        np.testing.assert_allclose(vals[:, k], ref, atol=1e-12)


def test_bordered_systems_have_expected_shape():
    adj = elem3d.build_adjacency(get_shape("prism"))
    assert elem3d.qf_system(adj).shape == (6, 6)
    assert elem3d.pe_system(adj).shape == (11, 11)
    r = elem3d.qf_rhs(get_shape("prism"), get_shape("prism").centroid)
    # columns sum to zero because the pyramids tile the cell
    np.testing.assert_allclose(r.sum(axis=0), 0.0, atol=1e-14)


def test_reference_point_outside_rejected():
    with pytest.raises(DomainError):
        elem3d.build_qf(get_shape("cube"), xstar=[2.0, 0.5, 0.5])


def test_other_reference_point_keeps_duality():
    p = get_shape("pyramid")
    hdiv = elem3d.build_qf(p, xstar=[0.3, 0.6, 0.2])
    tr = elem3d.face_normal_traces(hdiv, 10)
    assert np.abs(tr - np.eye(p.n_faces)[:, :, None]).max() < 1e-6


def test_fit_in_span_and_rank():
    x = np.random.default_rng(0).normal(size=(50, 3))
    basis = np.stack([np.ones_like(x), x], axis=1)  # (P, 2, 3)
    _, res = elem3d.fit_in_span(basis, (2 * x - 1)[:, None, :])
    assert res.max() < 1e-12
    _, res = elem3d.fit_in_span(basis, (x**2)[:, None, :])
    assert res.max() > 1e-3
    assert elem3d.numerical_rank(np.outer([1, 2, 3], [1, 1])) == 1


def test_interior_grid_is_inside():
    p = get_shape("octahedron")
    g = elem3d.interior_grid(p)
    assert len(g) >= 200
    assert np.all(p.face_distances(g) > 0.05 * p.diameter - 1e-15)


@pytest.mark.parametrize("name", ALL_SHAPES)
def test_verification_report(name, elements):
    rep = elem3d.verification_report(get_shape(name), elements=elements(name))
    assert rep["passed"], rep["checks"]
    assert rep["type"] == EXPECTED_TYPE[name]


def test_verification_report_skips_inclusion_when_neither_type():
    rep = elem3d.verification_report(skew_bipyramid())
    assert rep["type"] == "neither"
    assert "p1minus_inclusion" not in rep["checks"]
    assert rep["checks"]["duality"]
