"""Minimal H(curl) and H(div) elements on convex polyhedra.

    H(div):  q_f = c_{f,0} (x - x_*) + sum_g c_{f,g} curl W~_g
    H(curl): p_e = sum_i a_{e,i} grad lam_i + sum_f b_{e,f} W~_f

Coefficients come from small bordered linear systems built on the
adjacency matrices, so that ``q_f . n_f' = delta`` on faces and
``p_e . t_e' = delta`` on edges. Space-membership checks are least-squares
fits over an interior point grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gbc
from .gbc import TRACE_OFFSET, boundary_limit
from .polymesh import (
    INTERIOR,
    AdjacencyMatrices,
    GeometryError,
    Polyhedron,
    build_adjacency,
)
from .whitney import WhitneyForms, combination_curl, combination_value

RANK_TOL = 1e-9


def _solve_bordered(K, rhs, what):
    s = np.linalg.svd(K, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise GeometryError(f"{what} system is singular (sigma_min/sigma_max = {s[-1] / s[0]:.2e})")
    return np.linalg.solve(K, rhs)


# H(div) ----------------------------------------------------------------------


@dataclass(frozen=True)
class HdivBasis3D:
    forms: WhitneyForms
    xstar: np.ndarray
    c0: np.ndarray  # (F,)
    c: np.ndarray  # (F, F): c[f, g] multiplies curl W~_g in q_f

    @property
    def poly(self) -> Polyhedron:
        return self.forms.poly

    @property
    def divergence(self) -> np.ndarray:
        """Constant divergence of each basis function, ``|f| / |T|``."""
        return 3.0 * self.c0

    def evaluate(self, x, bc=None) -> np.ndarray:
        """Values of all q_f: shape (P, F, 3), or (F, 3) for a single point."""
        x = np.asarray(x, dtype=float)
        bc = gbc.eval3d(self.poly, x) if bc is None else bc
        curls = combination_curl(self.forms.face_matrices, bc)  # (..., F, 3)
        lin = self.c0[:, None] * (x - self.xstar)[..., None, :]
        return lin + np.einsum("fg,...gd->...fd", self.c, curls)


def qf_system(adj: AdjacencyMatrices) -> np.ndarray:
    """Bordered matrix ``[[M^F, 1], [1^T, 0]]``."""
    nf = adj.MF.shape[0]
    K = np.zeros((nf + 1, nf + 1))
    K[:nf, :nf] = adj.MF
    K[:nf, nf] = K[nf, :nf] = 1.0
    return K


def qf_rhs(poly: Polyhedron, xstar) -> np.ndarray:
    """Columns ``r_f`` with ``r_{f'} = delta |f'| - |T_{f'}| |f| / |T|``; shape (F, F)."""
    area = poly.face_areas
    pyramids = poly.face_distances(xstar) * area / 3.0  # |T_f'| for the apex x_*
    return np.diag(area) - np.outer(pyramids, area) / poly.volume


def build_qf(poly: Polyhedron, adjacency: AdjacencyMatrices | None = None, xstar=None,
             forms: WhitneyForms | None = None) -> HdivBasis3D:
    """H(div) basis; ``xstar`` defaults to the vertex centroid."""
    adjacency = adjacency or build_adjacency(poly)
    forms = forms or WhitneyForms(poly)
    xstar = poly.centroid if xstar is None else np.asarray(xstar, dtype=float)
    if np.any(poly.face_distances(xstar) <= 1e-14 * poly.diameter):
        raise gbc.DomainError(f"reference point {xstar.tolist()} is not inside the polyhedron")
    nf = poly.n_faces
    rhs = np.zeros((nf + 1, nf))
    rhs[:nf] = qf_rhs(poly, xstar)
    sol = _solve_bordered(qf_system(adjacency), rhs, "face")
    c0 = poly.face_areas / (3.0 * poly.volume)
    return HdivBasis3D(forms, xstar, c0, sol[:nf].T.copy())


# H(curl) ---------------------------------------------------------------------


@dataclass(frozen=True)
class HcurlBasis3D:
    forms: WhitneyForms
    adjacency: AdjacencyMatrices
    a: np.ndarray  # (E, n) gradient coefficients
    b: np.ndarray  # (E, F) face-form coefficients
    matrices: np.ndarray = field(repr=False)  # (E, n, n) antisymmetric part

    @property
    def poly(self) -> Polyhedron:
        return self.forms.poly

    def evaluate(self, x, bc=None) -> np.ndarray:
        """Values of all p_e: shape (P, E, 3), or (E, 3) for a single point."""
        bc = gbc.eval3d(self.poly, x) if bc is None else bc
        grad = np.einsum("ei,...id->...ed", self.a, bc.gradients)
        return grad + combination_value(self.matrices, bc)

    def curl(self, x, bc=None) -> np.ndarray:
        bc = gbc.eval3d(self.poly, x) if bc is None else bc
        return combination_curl(self.matrices, bc)


def pe_system(adj: AdjacencyMatrices) -> np.ndarray:
    """Square matrix ``[[A^V, A^F], [1^T, 0], [0, 1^T]]``."""
    ne, nv = adj.AVtoE.shape
    nf = adj.AFtoE.shape[1]
    K = np.zeros((ne + 2, nv + nf))
    K[:ne, :nv] = adj.AVtoE
    K[:ne, nv:] = adj.AFtoE
    K[ne, :nv] = 1.0
    K[ne + 1, nv:] = 1.0
    return K


def build_pe(poly: Polyhedron, adjacency: AdjacencyMatrices | None = None,
             forms: WhitneyForms | None = None) -> HcurlBasis3D:
    """H(curl) basis, one function per edge in the adjacency's edge order."""
    adjacency = adjacency or build_adjacency(poly)
    forms = forms or WhitneyForms(poly)
    K = pe_system(adjacency)
    if K.shape[0] != K.shape[1]:
        raise GeometryError("edge system is not square; Euler's formula fails")
    ne, nv = adjacency.AVtoE.shape
    v = poly.vertices
    lengths = np.array([np.linalg.norm(v[b] - v[a]) for a, b in adjacency.edges])
    rhs = np.zeros((ne + 2, ne))
    rhs[:ne] = np.diag(lengths)
    sol = _solve_bordered(K, rhs, "edge").T
    a, b = sol[:, :nv].copy(), sol[:, nv:].copy()
    return HcurlBasis3D(forms, adjacency, a, b, np.einsum("ef,fkl->ekl", b, forms.face_matrices))


@dataclass(frozen=True)
class Elements3D:
    poly: Polyhedron
    adjacency: AdjacencyMatrices
    forms: WhitneyForms
    hdiv: HdivBasis3D
    hcurl: HcurlBasis3D


def build_elements(poly: Polyhedron, xstar=None, policy=None) -> Elements3D:
    adj = build_adjacency(poly)
    forms = WhitneyForms(poly) if policy is None else WhitneyForms(poly, policy)
    return Elements3D(poly, adj, forms, build_qf(poly, adj, xstar, forms), build_pe(poly, adj, forms))


# sampling --------------------------------------------------------------------


def interior_grid(poly: Polyhedron, min_points: int = 200, margin: float = 0.05) -> np.ndarray:
    """Tensor grid over the bounding box, clipped to points at least
    ``margin * h_T`` inside every face."""
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    m = 6
    while True:
        axes = [np.linspace(a, b, m + 2)[1:-1] for a, b in zip(lo, hi)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        keep = np.all(poly.face_distances(pts) > margin * poly.diameter, axis=1)
        if keep.sum() >= min_points:
            return pts[keep]
        m += 2


def face_sample_points(poly: Polyhedron, f: int, count: int = 20, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random points inside face ``f``, away from its edges."""
    rng = np.random.default_rng(seed + 7919 * f)
    fv = poly.vertices[list(poly.faces[f])]
    w = rng.dirichlet(np.ones(len(fv)), size=count)
    pts = w @ fv
    centre = fv.mean(axis=0)
    return centre + 0.9 * (pts - centre)


def edge_inward(poly: Polyhedron, k: int) -> np.ndarray:
    fl, fr = poly.edge_faces[k]
    d = -(poly.face_normals[fl] + poly.face_normals[fr])
    return d / np.linalg.norm(d)


def face_trace(func, poly: Polyhedron, f: int, count: int = 20, offset=TRACE_OFFSET):
    pts = face_sample_points(poly, f, count)
    return boundary_limit(func, pts, -poly.face_normals[f], poly.diameter, offset)


def edge_trace(func, poly: Polyhedron, k: int, count: int = 5, offset=TRACE_OFFSET):
    a, b = poly.edges[k]
    s = (np.arange(count) + 0.5) / count
    pts = poly.vertices[a] + s[:, None] * (poly.vertices[b] - poly.vertices[a])
    return boundary_limit(func, pts, edge_inward(poly, k), poly.diameter, offset)


# verification ----------------------------------------------------------------


@dataclass
class DualityReport:
    face_residual: float
    edge_residual: float
    face_spread: float  # max std of q_f . n_f' over a face
    edge_spread: float

    def passed(self, tol: float = 1e-4) -> bool:
        return max(self.face_residual, self.edge_residual) < tol


def face_normal_traces(hdiv: HdivBasis3D, count: int = 20) -> np.ndarray:
    """``q_f . n_f'`` on every face f': shape (F, F', count)."""
    poly = hdiv.poly
    out = np.empty((poly.n_faces, poly.n_faces, count))
    for g in range(poly.n_faces):
        vals = face_trace(hdiv.evaluate, poly, g, count)
        out[:, g, :] = np.einsum("pfd,d->fp", vals, poly.face_normals[g])
    return out


def edge_tangent_traces(hcurl: HcurlBasis3D, count: int = 5) -> np.ndarray:
    """``p_e . t_e'`` on every edge e' (directions from the adjacency): (E, E', count)."""
    poly = hcurl.poly
    ne = len(hcurl.adjacency.edges)
    out = np.empty((ne, ne, count))
    for k, (a, b) in enumerate(hcurl.adjacency.edges):
        kk = poly.edge_index[(min(a, b), max(a, b))]
        t = poly.vertices[b] - poly.vertices[a]
        t /= np.linalg.norm(t)
        vals = edge_trace(hcurl.evaluate, poly, kk, count)
        out[:, k, :] = np.einsum("ped,d->ep", vals, t)
    return out


def verify_duality(hdiv: HdivBasis3D, hcurl: HcurlBasis3D, face_count: int = 20,
                   edge_count: int = 5) -> DualityReport:
    ft = face_normal_traces(hdiv, face_count)
    et = edge_tangent_traces(hcurl, edge_count)
    return DualityReport(
        float(np.abs(ft - np.eye(ft.shape[0])[:, :, None]).max()),
        float(np.abs(et - np.eye(et.shape[0])[:, :, None]).max()),
        float(ft.std(axis=2).max()),
        float(et.std(axis=2).max()),
    )


def numerical_rank(mat, tol: float = RANK_TOL) -> int:
    s = np.linalg.svd(np.asarray(mat), compute_uv=False)
    return int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0


def fit_in_span(basis_values, targets):
    """Least-squares fit of targets in the span of sampled basis fields.

    ``basis_values`` is (P, K, d) and ``targets`` (P, m, d). Returns the
    coefficients (m, K) and the max pointwise residual per target (m,).
    """
    B = np.asarray(basis_values)
    T = np.asarray(targets)
    P, K, d = B.shape
    A = B.transpose(0, 2, 1).reshape(P * d, K)
    rhs = T.transpose(0, 2, 1).reshape(P * d, -1)
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    res = np.abs(A @ coef - rhs).reshape(P, d, -1).max(axis=(0, 1))
    return coef.T, res


@dataclass
class ExactnessReport:
    dims: tuple  # (dim M0, dim M1, dim M2)
    expected: tuple  # (#V, #E, #F)
    grad_rank: int  # rank of grad on M0, expected #V - 1
    curl_rank: int  # rank of curl on M1, expected #F - 1
    grad_in_hcurl: float
    curl_in_hdiv: float
    curl_of_grad: float
    div_values: np.ndarray

    @property
    def exact(self) -> bool:
        nv, ne, nf = self.expected
        return (
            self.dims == self.expected
            and self.grad_rank == nv - 1
            and self.curl_rank == nf - 1
            and self.grad_in_hcurl < 1e-6
            and self.curl_in_hdiv < 1e-6
            and self.curl_of_grad < 1e-6
            and bool(np.all(np.abs(self.div_values) > 0))
        )

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "expected_dims": list(self.expected),
            "grad_rank": self.grad_rank,
            "curl_rank": self.curl_rank,
            "grad_in_hcurl_residual": self.grad_in_hcurl,
            "curl_in_hdiv_residual": self.curl_in_hdiv,
            "curl_of_grad_residual": self.curl_of_grad,
            "div_values": self.div_values.tolist(),
            "exact": self.exact,
        }


def check_exactness(hdiv: HdivBasis3D, hcurl: HcurlBasis3D, grid=None) -> ExactnessReport:
    poly = hdiv.poly
    x = interior_grid(poly) if grid is None else np.asarray(grid)
    bc = gbc.eval3d(poly, x)
    lam, grads = bc.values, bc.gradients
    p = hcurl.evaluate(x, bc)
    cp = hcurl.curl(x, bc)
    q = hdiv.evaluate(x, bc)

    def flat(v):
        return v.transpose(0, 2, 1).reshape(-1, v.shape[1])

    dims = (numerical_rank(lam), numerical_rank(flat(p)), numerical_rank(flat(q)))
    coef, res_grad = fit_in_span(p, grads)
    _, res_curl = fit_in_span(q, cp)
    curl_grad = np.einsum("ie,ped->pid", coef, cp)
    return ExactnessReport(
        dims=dims,
        expected=(poly.n, poly.n_edges, poly.n_faces),
        grad_rank=numerical_rank(flat(grads)),
        curl_rank=numerical_rank(flat(cp)),
        grad_in_hcurl=float(res_grad.max()),
        curl_in_hdiv=float(res_curl.max()),
        curl_of_grad=float(np.abs(curl_grad).max()),
        div_values=hdiv.divergence.copy(),
    )


# polyhedron types and polynomial inclusion ---------------------------------


def type_ii_residuals(poly: Polyhedron, center=None) -> np.ndarray:
    """Per vertex ``|(x_c - v_i) x sum_{e_ij in E} tau_ij|``."""
    xc = poly.centroid if center is None else np.asarray(center, dtype=float)
    v = poly.vertices
    out = np.empty(poly.n)
    for i, nbrs in enumerate(poly.neighbors):
        s = (v[list(nbrs)] - v[i]).sum(axis=0)
        out[i] = np.linalg.norm(np.cross(xc - v[i], s))
    return out


def classify_type(poly: Polyhedron, center=None) -> str:
    """``"TypeI"`` if there are no interior segments, ``"TypeII"`` if ``center``
    (default: vertex centroid) satisfies the center condition, else ``"neither"``."""
    if not np.any(poly.segment_classes == INTERIOR):
        return "TypeI"
    if type_ii_residuals(poly, center).max() < 1e-10 * poly.diameter**2:
        return "TypeII"
    return "neither"


def p1minus_generators(x, k: int) -> np.ndarray:
    """Spanning fields of the lowest-order polynomial space: (P, 6, 3) for
    ``k = 1`` (constants and ``e_j x x``) or (P, 4, 3) for ``k = 2``
    (constants and ``x``)."""
    x = np.atleast_2d(x)
    P = len(x)
    const = np.broadcast_to(np.eye(3), (P, 3, 3))
    if k == 1:
        rot = np.cross(np.eye(3)[None, :, :], x[:, None, :])
        return np.concatenate([const, rot], axis=1)
    if k == 2:
        return np.concatenate([const, x[:, None, :]], axis=1)
    raise ValueError("k must be 1 or 2")


def check_p1minus_inclusion(hdiv: HdivBasis3D, hcurl: HcurlBasis3D, grid=None) -> dict:
    """Max fit residual of each lowest-order polynomial generator."""
    poly = hdiv.poly
    x = interior_grid(poly) if grid is None else np.asarray(grid)
    bc = gbc.eval3d(poly, x)
    _, r1 = fit_in_span(hcurl.evaluate(x, bc), p1minus_generators(x, 1))
    _, r2 = fit_in_span(hdiv.evaluate(x, bc), p1minus_generators(x, 2))
    return {"hcurl": r1, "hdiv": r2}


def check_tangential_trace(hcurl: HcurlBasis3D, count: int = 20) -> float:
    """Max in-face component of ``p_e - |e| W~_e`` over samples on all faces."""
    poly = hcurl.poly
    forms = hcurl.forms
    v = poly.vertices
    edges = hcurl.adjacency.edges
    scaled = np.array([np.linalg.norm(v[b] - v[a]) * forms.tilde_matrix(a, b) for a, b in edges])

    def diff(x):
        bc = gbc.eval3d(poly, x)
        return hcurl.evaluate(x, bc) - combination_value(scaled, bc)

    worst = 0.0
    for f in range(poly.n_faces):
        n = poly.face_normals[f]
        d = face_trace(diff, poly, f, count)
        tang = d - np.einsum("ped,d->pe", d, n)[..., None] * n
        worst = max(worst, float(np.linalg.norm(tang, axis=-1).max()))
    return worst


@dataclass
class TypeIISolvability:
    vertex_residuals: np.ndarray
    solvable: bool
    coefficients: np.ndarray | None
    reconstruction_residual: float | None


def check_typeII_solvability(poly: Polyhedron, center=None, a=(1.0, 1.0, 1.0),
                             adjacency: AdjacencyMatrices | None = None) -> TypeIISolvability:
    """Solvability of ``A^F C = b`` with ``b_ij = (a x (v_i - x_c)) . tau_ij``."""
    adjacency = adjacency or build_adjacency(poly)
    xc = poly.centroid if center is None else np.asarray(center, dtype=float)
    a = np.asarray(a, dtype=float)
    v = poly.vertices
    res = np.zeros(poly.n)
    for i, nbrs in enumerate(poly.neighbors):
        res[i] = sum(np.cross(a, v[i] - xc) @ (v[j] - v[i]) for j in nbrs)
    scale = max(1.0, np.linalg.norm(a)) * poly.diameter**2
    solvable = bool(np.abs(res).max() < 1e-12 * scale)
    if not solvable:
        return TypeIISolvability(res, False, None, None)
    rhs = np.array([np.cross(a, v[i] - xc) @ (v[j] - v[i]) for i, j in adjacency.edges])
    AF = adjacency.AFtoE.astype(float)
    C, *_ = np.linalg.lstsq(AF, rhs, rcond=None)
    return TypeIISolvability(res, True, C, float(np.abs(AF @ C - rhs).max()))


def verification_report(poly: Polyhedron, center=None, elements: Elements3D | None = None) -> dict:
    """Everything ``verify``/``basis3d`` print, as plain JSON-ready data."""
    el = elements or build_elements(poly)
    dual = verify_duality(el.hdiv, el.hcurl)
    exact = check_exactness(el.hdiv, el.hcurl)
    kind = classify_type(poly, center)
    incl = check_p1minus_inclusion(el.hdiv, el.hcurl)
    incl_max = {k: float(v.max()) for k, v in incl.items()}
    checks = {
        "duality": dual.passed(1e-4),
        "exactness": exact.exact,
    }
    if kind != "neither":
        checks["p1minus_inclusion"] = max(incl_max.values()) < 1e-4
    return {
        "vertices": poly.n,
        "edges": poly.n_edges,
        "faces": poly.n_faces,
        "type": kind,
        "duality": {
            "face_residual": dual.face_residual,
            "edge_residual": dual.edge_residual,
            "face_spread": dual.face_spread,
            "edge_spread": dual.edge_spread,
        },
        "exactness": exact.as_dict(),
        "p1minus_inclusion": incl_max,
        "checks": checks,
        "passed": all(checks.values()),
    }
