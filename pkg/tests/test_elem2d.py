import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polywhitney import elem2d
from polywhitney.polymesh import DomainError, Polygon2D
from polywhitney.quadrature import polygon_rule
from polywhitney.shapes import random_convex_polygon, regular_polygon

from conftest import interior_points


def div_fd(func, x, h):
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    return ((func(x + ex)[..., 0] - func(x - ex)[..., 0]) + (func(x + ey)[..., 1] - func(x - ey)[..., 1])) / (2 * h)


class TestBasis:
    def test_triangle_is_raviart_thomas(self, rng):
        tri = Polygon2D([(0.0, 0.0), (1.2, 0.1), (0.3, 0.8)])
        basis = elem2d.build_basis2d(tri)
        x = interior_points(tri, 25, rng)
        v = tri.vertices
        for i in range(3):
            ref = tri.edge_lengths[i] / (2 * tri.area) * (x - v[(i + 2) % 3])
            np.testing.assert_allclose(basis.evaluate(x)[:, i], ref, atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), n=st.integers(3, 10))
    def test_duality(self, seed, n):
        poly = random_convex_polygon(n, np.random.default_rng(seed))
        assert elem2d.duality_residual(elem2d.build_basis2d(poly)) < 1e-6

    @pytest.mark.parametrize("n", [3, 4, 6, 10])
    def test_divergence_is_constant(self, n, rng):
        poly = random_convex_polygon(n, rng)
        basis = elem2d.build_basis2d(poly)
        x = interior_points(poly, 10, rng, shrink=0.7)
        d = div_fd(basis.evaluate, x, 1e-5 * poly.diameter)
        np.testing.assert_allclose(d, np.broadcast_to(basis.divergence, d.shape), rtol=1e-6)
        np.testing.assert_allclose(basis.divergence, poly.edge_lengths / poly.area)

    @pytest.mark.parametrize("n", [4, 7])
    def test_flux_table_rows_sum_to_zero(self, n, rng):
        b = elem2d.flux_table(random_convex_polygon(n, rng))
        np.testing.assert_allclose(b.sum(axis=1), 0.0, atol=1e-14)

    @pytest.mark.parametrize("n", [3, 5, 8])
    def test_constants_are_reproduced(self, n, rng):
        poly = random_convex_polygon(n, rng)
        basis = elem2d.build_basis2d(poly)
        x = interior_points(poly, 20, rng)
        for a in ([1.0, 0.0], [0.0, 1.0], [0.3, -2.0]):
            coef = elem2d.edge_mean_fluxes(poly, lambda y: np.broadcast_to(a, y.shape))
            np.testing.assert_allclose(basis.combine(coef, x), np.broadcast_to(a, x.shape), atol=1e-12)

    def test_other_reference_point_keeps_duality(self):
        poly = regular_polygon(6)
        basis = elem2d.build_basis2d(poly, xstar=[0.3, -0.2])
        assert elem2d.duality_residual(basis) < 1e-6

    def test_reference_point_outside_rejected(self):
        with pytest.raises(DomainError):
            elem2d.build_basis2d(regular_polygon(5), xstar=[2.0, 0.0])

    def test_mass_matrix_symmetric_positive(self):
        M = elem2d.build_basis2d(random_convex_polygon(6, np.random.default_rng(1))).mass_matrix()
        np.testing.assert_allclose(M, M.T, atol=1e-14)
        assert np.linalg.eigvalsh(M).min() > 0

    def test_chi_is_quarter_turn(self):
        np.testing.assert_array_equal(elem2d.chi(np.array([1.0, 2.0])), [-2.0, 1.0])


FIELDS = [
    # phi, grad phi, q, div q
    (
        lambda x: np.sin(x[..., 0]) * np.cos(x[..., 1]),
        lambda x: np.stack([np.cos(x[..., 0]) * np.cos(x[..., 1]), -np.sin(x[..., 0]) * np.sin(x[..., 1])], -1),
        lambda x: np.stack([x[..., 0] ** 2, x[..., 0] * x[..., 1]], -1),
        lambda x: 3 * x[..., 0],
    ),
    (
        lambda x: np.exp(x[..., 0] + 0.5 * x[..., 1]),
        lambda x: np.exp(x[..., 0] + 0.5 * x[..., 1])[..., None] * np.array([1.0, 0.5]),
        lambda x: np.stack([np.sin(x[..., 1]), np.cos(x[..., 0])], -1),
        lambda x: np.zeros(x.shape[:-1]),
    ),
]


@pytest.mark.parametrize("field", FIELDS)
@pytest.mark.parametrize("n", [3, 5, 9])
def test_commuting_diagram(field, n, rng):
    poly = random_convex_polygon(n, rng)
    res = elem2d.check_commute(poly, elem2d.build_basis2d(poly), *field)
    assert res.div_residual < 1e-10
    assert res.curl_residual < 1e-10


def test_nodal_interpolant_reproduces_linears(rng):
    poly = random_convex_polygon(7, rng)
    x = interior_points(poly, 10, rng)
    coef = elem2d.nodal_interp_IT(poly, 2 * poly.vertices[:, 0] - poly.vertices[:, 1])
    np.testing.assert_allclose(elem2d.eval_nodal(poly, coef, x), 2 * x[:, 0] - x[:, 1], atol=1e-13)
    np.testing.assert_allclose(elem2d.curl_nodal(poly, coef, x), np.broadcast_to([1.0, 2.0], x.shape), atol=1e-12)


def test_mean_projection():
    poly = regular_polygon(5, center=(1.0, 2.0))
    assert elem2d.mean_PT(poly, lambda x: x[..., 0]) == pytest.approx(1.0)
    rule = polygon_rule(poly, 4)
    assert elem2d.mean_PT(poly, lambda x: x[..., 1] ** 2) == pytest.approx(
        rule.integrate(rule.nodes[:, 1] ** 2) / poly.area
    )
