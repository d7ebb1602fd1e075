"""Wachspress coordinates and their gradients on convex polygons and polyhedra.

Both dimensions use the same rational form. With ``h_f(x)`` the distance
from ``x`` to the supporting line/plane of facet ``f`` and
``p_f = n_f / h_f``, each vertex weight is a sum of terms

    c * prod_{f in S} 1 / h_f(x)

over facet tuples ``S`` (the two edges at a polygon vertex, or the fan
triangles of the faces around a polyhedron vertex). Each term has gradient
``term * sum_{f in S} p_f``, so coordinates and gradients are exact up to
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polymesh import DomainError, GeometryError, Polygon2D, Polyhedron


@dataclass
class BarycentricEval:
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray

    def residuals(self, vertices) -> dict:
        """Partition of unity, linear precision and gradient-sum residuals."""
        lam, grad = self.values, self.gradients
        return {
            "partition": float(np.abs(lam.sum(axis=-1) - 1.0).max()),
            "linear_precision": float(np.abs(lam @ vertices - self.points).max()),
            "gradient_sum": float(np.abs(grad.sum(axis=-2)).max()),
        }


class _RationalWeights:
    """Shared evaluator for per-vertex sums of inverse-distance products."""

    def __init__(self, normals, offsets, terms, scale):
        self.normals = normals
        self.offsets = offsets
        self.scale = scale
        n = len(terms)
        width = max(len(t[1]) for ts in terms for t in ts)
        vert, coef, facets = [], [], []
        for v, ts in enumerate(terms):
            for c, fs in ts:
                vert.append(v)
                coef.append(c)
                facets.append(fs)
        self.n = n
        self.term_vertex = np.array(vert)
        self.term_coef = np.array(coef)
        self.term_facets = np.array(facets).reshape(len(facets), width)
        self.incidence = np.zeros((len(vert), n))
        self.incidence[np.arange(len(vert)), self.term_vertex] = 1.0

    def __call__(self, x, strict=True):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        h = self.offsets - x @ self.normals.T
        tol = 1e-14 * self.scale
        if strict and np.any(h <= tol):
            bad = np.flatnonzero(np.any(h <= tol, axis=1))
            raise DomainError(
                f"{len(bad)} point(s) not strictly inside the cell, e.g. {x[bad[0]].tolist()}"
            )
        inv = 1.0 / h
        p = inv[:, :, None] * self.normals[None, :, :]
        terms = self.term_coef * np.prod(inv[:, self.term_facets], axis=-1)
        pterm = p[:, self.term_facets, :].sum(axis=2)
        w = terms @ self.incidence
        dw = np.einsum("ptd,tv->pvd", terms[:, :, None] * pterm, self.incidence)
        total = w.sum(axis=1, keepdims=True)
        lam = w / total
        grad = (dw - lam[:, :, None] * dw.sum(axis=1, keepdims=True)) / total[:, :, None]
        if single:
            return BarycentricEval(x[0], lam[0], grad[0])
        return BarycentricEval(x, lam, grad)


def _polygon_weights(poly: Polygon2D) -> _RationalWeights:
    nrm = poly.normals
    offsets = np.einsum("ed,ed->e", nrm, poly.vertices)
    n = poly.n
    terms = []
    for i in range(n):
        a, b = (i - 1) % n, i
        c = abs(nrm[a, 0] * nrm[b, 1] - nrm[a, 1] * nrm[b, 0])
        terms.append([(c, (a, b))])
    return _RationalWeights(nrm, offsets, terms, poly.diameter)


def _polyhedron_weights(poly: Polyhedron) -> _RationalWeights:
    nrm = poly.face_normals
    terms = []
    for v in range(poly.n):
        ring = poly.vertex_faces[v]
        ts = []
        for j in range(1, len(ring) - 1):
            fs = (ring[0], ring[j], ring[j + 1])
            ts.append((abs(np.linalg.det(nrm[list(fs)])), fs))
        terms.append(ts)
    return _RationalWeights(nrm, poly.face_offsets, terms, poly.diameter)


_CACHE_ATTR = "_wachspress_weights"


def _weights(poly):
    if not isinstance(poly, (Polygon2D, Polyhedron)):
        raise TypeError(f"unsupported cell type {type(poly).__name__}")
    w = poly.__dict__.get(_CACHE_ATTR)
    if w is None:
        w = _polygon_weights(poly) if isinstance(poly, Polygon2D) else _polyhedron_weights(poly)
        poly.__dict__[_CACHE_ATTR] = w
    return w


def eval2d(poly: Polygon2D, x) -> BarycentricEval:
    """Wachspress coordinates and gradients at interior point(s) ``x``."""
    return _weights(poly)(x)


def eval3d(poly: Polyhedron, x) -> BarycentricEval:
    """Wachspress coordinates and gradients at interior point(s) ``x``."""
    return _weights(poly)(x)


def evaluate(poly, x) -> BarycentricEval:
    return _weights(poly)(x)


def trace2d(poly: Polygon2D, edge: int, s) -> np.ndarray:
    """Coordinates on edge ``edge`` at parameter ``s`` (piecewise linear trace)."""
    s = np.asarray(s, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise ValueError("edge parameter must lie in [0, 1]")
    out = np.zeros(s.shape + (poly.n,))
    out[..., edge] = 1.0 - s
    out[..., (edge + 1) % poly.n] = s
    return out


def affine_coordinates(simplex_vertices, x) -> np.ndarray:
    """Classical barycentric coordinates by a direct linear solve."""
    v = np.asarray(simplex_vertices, dtype=float)
    x = np.atleast_2d(x)
    m = np.vstack([np.ones(len(v)), v.T])
    rhs = np.vstack([np.ones(len(x)), x.T])
    return np.linalg.solve(m, rhs).T


def _det2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def check_face_cross_products(face: Polygon2D, x) -> np.ndarray:
    """Residuals of the constant gradient-determinant identities on a face.

    Triangle: ``det[grad l_i, grad l_j] - 1/(2|f|)`` for the three cyclic
    pairs. Parallelogram: the two sums ``det[g1 g2] + det[g3 g4]`` and
    ``det[g2 g3] + det[g4 g1]`` minus ``1/|f|``. Returns shape (P, 3) or
    (P, 2).
    """
    g = np.atleast_3d(eval2d(face, np.atleast_2d(x)).gradients)
    area = face.area
    if face.n == 3:
        pairs = [(0, 1), (1, 2), (2, 0)]
        return np.stack([_det2(g[:, i], g[:, j]) - 0.5 / area for i, j in pairs], axis=1)
    if face.n == 4:
        gap = np.linalg.norm(face.vertices[0] - face.vertices[1] + face.vertices[2] - face.vertices[3])
        if gap <= 1e-12 * face.diameter:
            r1 = _det2(g[:, 0], g[:, 1]) + _det2(g[:, 2], g[:, 3]) - 1.0 / area
            r2 = _det2(g[:, 1], g[:, 2]) + _det2(g[:, 3], g[:, 0]) - 1.0 / area
            return np.stack([r1, r2], axis=1)
    raise GeometryError("cross-product identities hold only on triangles and parallelograms")


TRACE_OFFSET = 1e-7


def boundary_limit(func, points, inward, scale, offset=TRACE_OFFSET):
    """Boundary value of ``func`` at ``points`` from interior samples.

    Samples at distances ``eps`` and ``2 eps`` (``eps = offset * scale``)
    along the unit ``inward`` direction and extrapolates linearly, which
    removes the first-order offset error.
    """
    points = np.asarray(points, dtype=float)
    step = offset * scale * np.asarray(inward, dtype=float)
    return 2.0 * np.asarray(func(points + step)) - np.asarray(func(points + 2.0 * step))
