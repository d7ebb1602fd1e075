"""Gauss rules on segments, triangles and convex polygons."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .polymesh import Polygon2D

DEFAULT_DEGREE = 10


@dataclass(frozen=True)
class PolygonRule:
    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def integrate(self, values) -> np.ndarray:
        """Integrate sampled values; the first axis runs over the nodes."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


@lru_cache(maxsize=None)
def gauss_legendre01(npoints: int):
    x, w = np.polynomial.legendre.leggauss(npoints)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree: int):
    """Collapsed (Duffy) Gauss rule on the reference triangle (0,0),(1,0),(0,1).

    Gauss-Jacobi(1, 0) in the collapsed direction absorbs the Jacobian, so
    ``m = ceil((degree + 1) / 2)`` points per direction integrate every
    polynomial of total degree ``<= degree`` exactly. Weights are positive.
    """
    m = (degree + 2) // 2
    t, wt = roots_jacobi(m, 1.0, 0.0)
    u = 0.5 * (1.0 + t)
    wu = 0.25 * wt
    v, wv = gauss_legendre01(m)
    U, V = np.meshgrid(u, v, indexing="ij")
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    w = np.outer(wu, wv).ravel()
    return pts, w


def polygon_rule(poly: Polygon2D, degree: int = DEFAULT_DEGREE) -> PolygonRule:
    """Fan rule: the polygon is split into triangles sharing the centroid."""
    if not 1 <= degree <= 20:
        raise ValueError(f"unsupported quadrature degree {degree}; use 1..20")
    ref, wref = triangle_rule(degree)
    c = poly.centroid
    v = poly.vertices
    w_next = np.roll(v, -1, axis=0)
    a = v - c
    b = w_next - c
    jac = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    nodes = c + ref[None, :, 0, None] * a[:, None, :] + ref[None, :, 1, None] * b[:, None, :]
    weights = jac[:, None] * wref[None, :]
    return PolygonRule(nodes.reshape(-1, 2), weights.ravel(), degree)


def edge_rule(a, b, npoints: int = 10):
    """Gauss-Legendre nodes and weights on the segment from ``a`` to ``b``."""
    if not 1 <= npoints <= 32:
        raise ValueError(f"unsupported number of edge points {npoints}; use 1..32")
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    s, w = gauss_legendre01(npoints)
    length = np.linalg.norm(b - a)
    return a + s[:, None] * (b - a), w * length


def monomial_integral(poly: Polygon2D, px: int, py: int) -> float:
    """Exact integral of ``x**px * y**py`` by the divergence theorem.

    Uses ``x^px y^py = div([x^(px+1) y^py / (px+1), 0])`` and an edge Gauss
    rule that is exact for the resulting boundary polynomials.
    """
    npts = (px + py + 2) // 2 + 1
    total = 0.0
    for k in range(poly.n):
        a, b = poly.vertices[k], poly.vertices[(k + 1) % poly.n]
        x, w = edge_rule(a, b, npts)
        total += poly.normals[k, 0] * np.sum(w * x[:, 0] ** (px + 1) * x[:, 1] ** py) / (px + 1)
    return float(total)
