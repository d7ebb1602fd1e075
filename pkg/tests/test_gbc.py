import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polywhitney import gbc
from polywhitney.polymesh import Polygon2D
from polywhitney.shapes import box, get_shape, random_convex_polygon, regular_polygon

from conftest import ALL_SHAPES, interior_points


def fd_gradient(func, x, h):
    """Central differences of a (P, d) -> (P, n) map: shape (P, n, d)."""
    cols = []
    for k in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[k] = h
        cols.append((func(x + e) - func(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


@st.composite
def polygons(draw):
    seed = draw(st.integers(0, 2**31 - 1))
    n = draw(st.integers(3, 10))
    return random_convex_polygon(n, np.random.default_rng(seed))


class TestPolygonCoordinates:
    @settings(max_examples=40, deadline=None)
    @given(poly=polygons(), seed=st.integers(0, 1000))
    def test_partition_linear_precision_positivity(self, poly, seed):
        x = interior_points(poly, 30, np.random.default_rng(seed))
        bc = gbc.eval2d(poly, x)
        res = bc.residuals(poly.vertices)
        assert res["partition"] < 1e-13
        assert res["linear_precision"] < 1e-13 * poly.diameter
        assert res["gradient_sum"] < 1e-11 / poly.diameter
        assert np.all(bc.values > 0)

    @pytest.mark.parametrize("n", [4, 5, 7, 10])
    def test_lagrange_property_at_vertices(self, n):
        poly = regular_polygon(n)
        c = poly.centroid
        near = poly.vertices + 1e-9 * (c - poly.vertices)
        np.testing.assert_allclose(gbc.eval2d(poly, near).values, np.eye(n), atol=1e-7)

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_linear_on_edges(self, n, rng):
        poly = random_convex_polygon(n, rng)
        s = np.linspace(0.1, 0.9, 7)
        for j in range(n):
            a, b = poly.vertices[j], poly.vertices[(j + 1) % n]
            pts = a + s[:, None] * (b - a) - 1e-10 * poly.diameter * poly.normals[j]
            lam = gbc.eval2d(poly, pts).values
            np.testing.assert_allclose(lam, gbc.trace2d(poly, j, s), atol=1e-8)

    def test_triangle_matches_affine(self, rng):
        tri = Polygon2D([(0.1, 0.0), (1.3, 0.2), (0.4, 0.9)])
        x = interior_points(tri, 50, rng)
        np.testing.assert_allclose(gbc.eval2d(tri, x).values, gbc.affine_coordinates(tri.vertices, x), atol=1e-14)

    def test_unit_square_is_bilinear(self, rng):
        sq = Polygon2D([(0, 0), (1, 0), (1, 1), (0, 1)])
        x = rng.uniform(0.05, 0.95, size=(40, 2))
        X, Y = x[:, 0], x[:, 1]
        ref = np.column_stack([(1 - X) * (1 - Y), X * (1 - Y), X * Y, (1 - X) * Y])
        np.testing.assert_allclose(gbc.eval2d(sq, x).values, ref, atol=1e-14)

    @pytest.mark.parametrize("n", [3, 4, 6, 9])
    def test_gradient_matches_finite_differences(self, n, rng):
        poly = random_convex_polygon(n, rng)
        x = interior_points(poly, 20, rng, shrink=0.7)
        g = gbc.eval2d(poly, x).gradients
        fd = fd_gradient(lambda p: gbc.eval2d(poly, p).values, x, 1e-6 * poly.diameter)
        assert np.abs(g - fd).max() / np.abs(g).max() < 1e-7

    def test_single_point_shapes(self):
        poly = regular_polygon(5)
        bc = gbc.eval2d(poly, np.array([0.1, 0.0]))
        assert bc.values.shape == (5,)
        assert bc.gradients.shape == (5, 2)


class TestPolyhedronCoordinates:
    @pytest.mark.parametrize("name", ALL_SHAPES)
    def test_partition_and_linear_precision(self, name, rng):
        p = get_shape(name)
        x = interior_points(p, 60, rng)
        bc = gbc.eval3d(p, x)
        res = bc.residuals(p.vertices)
        assert max(res.values()) < 1e-12
        assert np.all(bc.values > 0)

    def test_tetrahedron_matches_affine(self, rng):
        p = get_shape("tetrahedron")
        x = interior_points(p, 40, rng)
        np.testing.assert_allclose(gbc.eval3d(p, x).values, gbc.affine_coordinates(p.vertices, x), atol=1e-14)

    def test_box_is_trilinear(self, rng):
        h = np.array([1.0, 2.0, 0.5])
        p = box(*h)
        x = rng.uniform(0.05, 0.95, size=(40, 3)) * h
        t = x / h
        ref = np.empty((40, 8))
        for k, v in enumerate(p.vertices / h):
            ref[:, k] = np.prod(np.where(v > 0, t, 1 - t), axis=1)
        np.testing.assert_allclose(gbc.eval3d(p, x).values, ref, atol=1e-14)

    def test_prism_matches_closed_form(self, rng):
        p = get_shape("prism")
        x = interior_points(p, 40, rng)
        X, Y, Z = x.T
        ref = np.column_stack([(1 - X - Y) * (1 - Z), X * (1 - Z), Y * (1 - Z), (1 - X - Y) * Z, X * Z, Y * Z])
        np.testing.assert_allclose(gbc.eval3d(p, x).values, ref, atol=1e-14)

    @pytest.mark.parametrize("name", ALL_SHAPES)
    def test_gradient_matches_finite_differences(self, name, rng):
        p = get_shape(name)
        x = interior_points(p, 20, rng, shrink=0.7)
        g = gbc.eval3d(p, x).gradients
        fd = fd_gradient(lambda q: gbc.eval3d(p, q).values, x, 1e-6 * p.diameter)
        assert np.abs(g - fd).max() / np.abs(g).max() < 1e-7

    def test_unsupported_cell(self):
        with pytest.raises(TypeError):
            gbc.evaluate(object(), np.zeros((1, 2)))


class TestFaceIdentities:
    def test_triangle(self, rng):
        tri = Polygon2D([(0, 0), (2, 0.3), (0.5, 1.5)])
        res = gbc.check_face_cross_products(tri, interior_points(tri, 20, rng))
        assert np.abs(res).max() < 1e-12

    def test_parallelogram(self, rng):
        par = Polygon2D([(0, 0), (2, 0), (2.7, 1), (0.7, 1)])
        res = gbc.check_face_cross_products(par, interior_points(par, 20, rng))
        assert np.abs(res).max() < 1e-12

    def test_general_quad_rejected(self):
        quad = Polygon2D([(0, 0), (2, 0), (1.5, 1), (0.2, 1.3)])
        with pytest.raises(Exception, match="parallelograms"):
            gbc.check_face_cross_products(quad, np.array([[0.8, 0.5]]))


def test_boundary_limit_is_exact_for_linear_functions():
    pts = np.array([[0.3, 0.0], [0.7, 0.0]])

    def f(x):
        return 3.0 * x[:, 0] - 2.0 * x[:, 1] + 1.0

    assert np.allclose(gbc.boundary_limit(f, pts, [0.0, 1.0], 1.0, 1e-3), f(pts), atol=1e-14)


def test_boundary_limit_removes_first_order_error():
    pts = np.array([[0.5, 0.0]])

    def f(x):
        return np.exp(x[:, 1])

    plain = abs(f(pts + [0, 1e-3])[0] - 1.0)
    extrap = abs(gbc.boundary_limit(f, pts, [0.0, 1.0], 1.0, 1e-3)[0] - 1.0)
    # second order: error ~ eps^2 instead of eps
    assert extrap < 2e-3 * plain
