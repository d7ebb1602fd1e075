"""Lowest-order H(div) element on convex polygons built from Wachspress coordinates.

Each edge ``e_i`` (from ``v_i`` to ``v_{i+1}``) carries one basis function

    q_i = c_{i,0} (x - x_*) + sum_k c_{i,k} curl(lam_k),    curl = chi grad

with ``chi`` the counterclockwise quarter turn. The coefficients are given
in closed form so that ``q_i . n_j = delta_ij`` on every edge ``e_j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gbc
from .gbc import TRACE_OFFSET, boundary_limit
from .polymesh import DomainError, Polygon2D
from .quadrature import DEFAULT_DEGREE, edge_rule, polygon_rule



def chi(v) -> np.ndarray:
    """Quarter turn ``(a, b) -> (-b, a)`` on the last axis."""
    v = np.asarray(v)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


@dataclass(frozen=True)
class HdivBasis2D:
    poly: Polygon2D
    xstar: np.ndarray
    c0: np.ndarray  # (n,)
    c: np.ndarray  # (n, n): c[i, k] multiplies curl(lam_k) in q_i
    b: np.ndarray  # (n, n): c[i, k] - c[i, k+1] = b[i, k]

    @property
    def n(self) -> int:
        return self.poly.n

    @property
    def divergence(self) -> np.ndarray:
        """Constant divergence of each basis function, ``|e_i| / |T|``."""
        return 2.0 * self.c0

    def evaluate(self, x) -> np.ndarray:
        """Values of all basis functions: shape (P, n, 2), or (n, 2) for one point."""
        x = np.asarray(x, dtype=float)
        bc = gbc.eval2d(self.poly, x)
        rot = chi(bc.gradients)  # (..., n, 2)
        lin = self.c0[:, None] * (x - self.xstar)[..., None, :]
        return lin + np.einsum("ik,...kd->...id", self.c, rot)

    def combine(self, coeffs, x) -> np.ndarray:
        """Evaluate ``sum_i coeffs_i q_i`` at ``x``."""
        return np.einsum("i,...id->...d", np.asarray(coeffs, dtype=float), self.evaluate(x))

    def mass_matrix(self, degree: int = DEFAULT_DEGREE) -> np.ndarray:
        rule = polygon_rule(self.poly, degree)
        q = self.evaluate(rule.nodes)
        return np.einsum("p,pid,pjd->ij", rule.weights, q, q)


def flux_table(poly: Polygon2D, xstar=None) -> np.ndarray:
    """``b[i, l] = delta_il |e_l| - |e_i| |T_l| / |T|``.

    ``T_l`` is the triangle spanned by ``x_*`` and edge ``l``; every row sums to 0.
    """
    xstar = poly.centroid if xstar is None else xstar
    e = poly.edge_lengths
    tl = 0.5 * e * poly.edge_distances(xstar)
    return np.diag(e) - np.outer(e, tl) / poly.area


def build_basis2d(poly: Polygon2D, xstar=None) -> HdivBasis2D:
    """Closed-form coefficients; ``xstar`` defaults to the area centroid."""
    xstar = poly.centroid if xstar is None else np.asarray(xstar, dtype=float)
    if np.any(poly.edge_distances(xstar) <= 1e-14 * poly.diameter):
        raise DomainError(f"reference point {xstar.tolist()} is not inside the polygon")
    n = poly.n
    b = flux_table(poly, xstar)
    c0 = poly.edge_lengths / (2.0 * poly.area)
    # c[i, k] = -(1/n) sum_{l=1}^{n-1} l * b[i, k+l]
    c = np.zeros((n, n))
    for l in range(1, n):
        c -= l * np.roll(b, -l, axis=1)
    c /= n
    return HdivBasis2D(poly, xstar, c0, c, b)


def edge_points(poly: Polygon2D, j: int, s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return poly.vertices[j] + s[:, None] * poly.edge_vectors[j]


def duality_matrix(basis: HdivBasis2D, npoints: int = 5, offset=TRACE_OFFSET) -> np.ndarray:
    """Normal traces ``q_i . n_j`` on every edge: shape (n, n, npoints).

    Traces are boundary limits of interior samples offset by ``offset * h_T``.
    """
    poly = basis.poly
    s = (np.arange(npoints) + 0.5) / npoints
    out = np.empty((poly.n, poly.n, npoints))
    for j in range(poly.n):
        q = boundary_limit(basis.evaluate, edge_points(poly, j, s), -poly.normals[j],
                           poly.diameter, offset)
        out[:, j, :] = np.einsum("pid,d->ip", q, poly.normals[j])
    return out


def duality_residual(basis: HdivBasis2D, npoints: int = 5) -> float:
    tr = duality_matrix(basis, npoints)
    return float(np.abs(tr - np.eye(basis.n)[:, :, None]).max())


# interpolation operators ---------------------------------------------------


def edge_mean_fluxes(poly: Polygon2D, field, npoints: int = 10) -> np.ndarray:
    """Mean normal flux ``(1/|e_j|) int_{e_j} q . n_j`` of a vector callable."""
    out = np.empty(poly.n)
    for j in range(poly.n):
        a, b = poly.vertices[j], poly.vertices[(j + 1) % poly.n]
        x, w = edge_rule(a, b, npoints)
        out[j] = w @ (np.asarray(field(x)) @ poly.normals[j]) / poly.edge_lengths[j]
    return out


def interpolate_PiT(poly: Polygon2D, basis: HdivBasis2D, fluxes) -> np.ndarray:
    """Coefficients of the canonical interpolant: the mean normal fluxes themselves."""
    fluxes = np.asarray(fluxes, dtype=float)
    if fluxes.shape != (poly.n,):
        raise ValueError(f"expected {poly.n} edge fluxes, got shape {fluxes.shape}")
    return fluxes.copy()


def nodal_interp_IT(poly: Polygon2D, vertex_values) -> np.ndarray:
    """Coefficients of ``I_T phi = sum_i phi(v_i) lam_i``."""
    vals = np.asarray(vertex_values, dtype=float)
    if vals.shape != (poly.n,):
        raise ValueError(f"expected {poly.n} vertex values, got shape {vals.shape}")
    return vals.copy()


def eval_nodal(poly: Polygon2D, coeffs, x) -> np.ndarray:
    return gbc.eval2d(poly, x).values @ np.asarray(coeffs)


def curl_nodal(poly: Polygon2D, coeffs, x) -> np.ndarray:
    """``curl I_T phi = chi sum_i phi(v_i) grad lam_i``."""
    g = gbc.eval2d(poly, x).gradients
    return chi(np.einsum("i,...id->...d", np.asarray(coeffs), g))


def mean_PT(poly: Polygon2D, phi, degree: int = DEFAULT_DEGREE) -> float:
    """Cell average ``(1/|T|) int_T phi``."""
    rule = polygon_rule(poly, degree)
    return float(rule.integrate(np.asarray(phi(rule.nodes))) / poly.area)


@dataclass
class CommuteResult:
    div_residual: float
    curl_residual: float


def check_commute(poly: Polygon2D, basis: HdivBasis2D, phi, grad_phi, q, div_q,
                  samples=None, npoints: int = 10) -> CommuteResult:
    """Residuals of ``div Pi q = P div q`` and ``Pi curl phi = curl I phi``.

    ``phi``/``grad_phi`` and ``q``/``div_q`` are callables on (P, 2) arrays.
    """
    a = interpolate_PiT(poly, basis, edge_mean_fluxes(poly, q, npoints))
    div_pi = float(a @ basis.divergence)
    r1 = abs(div_pi - mean_PT(poly, div_q))

    def curl_phi(x):
        return chi(grad_phi(x))

    a2 = interpolate_PiT(poly, basis, edge_mean_fluxes(poly, curl_phi, npoints))
    if samples is None:
        samples = polygon_rule(poly, 4).nodes
    lhs = basis.combine(a2, samples)
    rhs = curl_nodal(poly, nodal_interp_IT(poly, phi(poly.vertices)), samples)
    return CommuteResult(r1, float(np.abs(lhs - rhs).max()))
