"""Whitney forms built from generalized barycentric coordinates.

Every 1-form used here is a combination ``sum_kl S_kl W_kl`` of Whitney
1-forms. Such a combination is stored as the antisymmetric matrix
``A = S - S^T``; then, with ``lam`` the coordinates and ``G`` their
gradients,

    value = sum_l (lam @ A)_l * G_l
    curl  = sum_kl A_kl * (G_k x G_l)

which uses ``curl W_kl = 2 grad l_k x grad l_l`` and needs no numerical
differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import gbc
from .polymesh import EDGE, FACE_DIAGONAL, INTERIOR, GeometryError, Polyhedron


def min_norm_combination(target, edge_vectors) -> np.ndarray:
    """Minimum-norm coefficients ``c`` with ``edge_vectors.T @ c = target``."""
    return np.linalg.pinv(np.asarray(edge_vectors).T) @ np.asarray(target)


@dataclass(frozen=True)
class InteriorCombination:
    """``coefficients[(i, k)][j]`` expresses ``tau_ik`` through edges ``e_ij``."""

    coefficients: dict

    def residuals(self, poly: Polyhedron) -> dict:
        v = poly.vertices
        out = {}
        for (i, k), cs in self.coefficients.items():
            rec = sum(c * (v[j] - v[i]) for j, c in cs.items())
            out[(i, k)] = float(np.linalg.norm(rec - (v[k] - v[i])) / np.linalg.norm(v[k] - v[i]))
        return out


def build_interior_combinations(poly: Polyhedron, policy=min_norm_combination) -> InteriorCombination:
    """Write every interior segment at a vertex through that vertex's edges.

    ``policy(target, edge_vectors)`` returns the coefficients; any exact
    choice is admissible, the default is the minimum-norm one.
    """
    cls = poly.segment_classes
    v = poly.vertices
    coeffs = {}
    for i in range(poly.n):
        js = np.flatnonzero(cls[i] == EDGE)
        taus = v[js] - v[i]
        for k in np.flatnonzero(cls[i] == INTERIOR):
            target = v[k] - v[i]
            c = np.asarray(policy(target, taus), dtype=float)
            if np.linalg.norm(taus.T @ c - target) > 1e-12 * np.linalg.norm(target):
                raise GeometryError(f"edges at vertex {i} cannot reproduce segment ({i},{k})")
            coeffs[(int(i), int(k))] = {int(j): float(cj) for j, cj in zip(js, c)}
    return InteriorCombination(coeffs)


def combination_value(A, bc: gbc.BarycentricEval) -> np.ndarray:
    """Evaluate ``(lam @ A) . G`` for one matrix (n,n) or a stack (m,n,n)."""
    lam = np.atleast_2d(bc.values)
    grad = bc.gradients.reshape(lam.shape + (-1,))
    A = np.asarray(A)
    if A.ndim == 2:
        coef = lam @ A
        out = np.einsum("pl,pld->pd", coef, grad)
    else:
        coef = np.einsum("pk,mkl->pml", lam, A)
        out = np.einsum("pml,pld->pmd", coef, grad)
    return out if np.ndim(bc.values) == 2 else out[0]


def gradient_crosses(bc: gbc.BarycentricEval) -> np.ndarray:
    grad = bc.gradients if bc.gradients.ndim == 3 else bc.gradients[None]
    return np.cross(grad[:, :, None, :], grad[:, None, :, :])


def combination_curl(A, bc: gbc.BarycentricEval, crosses=None) -> np.ndarray:
    X = gradient_crosses(bc) if crosses is None else crosses
    A = np.asarray(A)
    if A.ndim == 2:
        out = np.einsum("kl,pkld->pd", A, X)
    else:
        out = np.einsum("mkl,pkld->pmd", A, X)
    return out if bc.gradients.ndim == 3 else out[0]


def eval_W1(cell, i: int, j: int, x) -> np.ndarray:
    """Whitney 1-form ``lam_i grad lam_j - lam_j grad lam_i`` at interior points."""
    bc = gbc.evaluate(cell, x)
    lam, g = bc.values, bc.gradients
    return lam[..., i, None] * g[..., j, :] - lam[..., j, None] * g[..., i, :]


def eval_W2(cell: Polyhedron, i: int, j: int, k: int, x) -> np.ndarray:
    """Whitney 2-form as the cyclic sum of ``lam_i grad lam_j x grad lam_k``."""
    bc = gbc.evaluate(cell, x)
    lam, g = bc.values, bc.gradients
    out = 0.0
    for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
        out = out + lam[..., a, None] * np.cross(g[..., b, :], g[..., c, :])
    return out


class WhitneyForms:
    """Modified edge forms and face forms on one polyhedron."""

    def __init__(self, poly: Polyhedron, policy=min_norm_combination):
        self.poly = poly
        self.classes = poly.segment_classes
        self.interior = build_interior_combinations(poly, policy)

    @cached_property
    def _edge_vertex_sets(self) -> dict:
        out = {}
        for e, (fl, fr) in zip(self.poly.edges, self.poly.edge_faces):
            out[e] = set(self.poly.faces[fl]) | set(self.poly.faces[fr])
        return out

    def tilde_matrix(self, i: int, j: int) -> np.ndarray:
        """Antisymmetric coefficient matrix of the modified form on ``e_ij``."""
        cls = self.classes
        if cls[i, j] != EDGE:
            raise GeometryError(f"segment ({i},{j}) is not an edge")
        n = self.poly.n
        S = np.zeros((n, n))
        S[i, j] += 1.0
        vij = self._edge_vertex_sets[(min(i, j), max(i, j))]
        for k in vij:
            if cls[i, k] == FACE_DIAGONAL:
                S[i, k] += 0.5
            if cls[j, k] == FACE_DIAGONAL:
                S[j, k] -= 0.5
        C = self.interior.coefficients
        for k in np.flatnonzero(cls[i] == INTERIOR):
            S[i, k] += 0.5 * C[(i, int(k))][j]
        for k in np.flatnonzero(cls[j] == INTERIOR):
            S[j, k] -= 0.5 * C[(j, int(k))][i]
        return S - S.T

    @cached_property
    def edge_matrices(self) -> np.ndarray:
        """(#E, n, n) matrices for ``E+`` edges in the polyhedron's order."""
        return np.array([self.tilde_matrix(a, b) for a, b in self.poly.edges])

    @cached_property
    def face_matrices(self) -> np.ndarray:
        """(#F, n, n) matrices of the face forms (oriented boundary sums)."""
        out = []
        for f in self.poly.faces:
            out.append(sum(self.tilde_matrix(a, b) for a, b in zip(f, f[1:] + f[:1])))
        return np.array(out)

    # point evaluation -------------------------------------------------
    def tilde_w(self, i: int, j: int, x) -> np.ndarray:
        return combination_value(self.tilde_matrix(i, j), gbc.eval3d(self.poly, x))

    def tilde_wf(self, f: int, x) -> np.ndarray:
        self._check_face(f)
        return combination_value(self.face_matrices[f], gbc.eval3d(self.poly, x))

    def curl_tilde_wf(self, f: int, x) -> np.ndarray:
        self._check_face(f)
        return combination_curl(self.face_matrices[f], gbc.eval3d(self.poly, x))

    def _check_face(self, f):
        if not 0 <= f < self.poly.n_faces:
            raise IndexError(f"face index {f} out of range")


def check_constant_reproduction(poly: Polyhedron, a, b, x, forms: WhitneyForms | None = None) -> dict:
    """Residuals of the constant / rotation reproduction identities.

    * ``sum_{i<j} (a . tau_ij) W_ij = a``
    * ``sum_{e_ij in E} (b . tau_ij) W~_ij = 2 b``
    * ``sum_{e_ij in E} ((a x v_i) . tau_ij) W~_ij = 2 a x x``
    """
    forms = forms or WhitneyForms(poly)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    x = np.atleast_2d(x)
    bc = gbc.eval3d(poly, x)
    v, n = poly.vertices, poly.n
    tau = v[None, :, :] - v[:, None, :]
    S = np.triu(tau @ a, 1)
    r1 = combination_value(S - S.T, bc) - a
    Ab = np.zeros((n, n))
    Arot = np.zeros((n, n))
    for (i, j), M in zip(poly.edges, forms.edge_matrices):
        # e_ij and e_ji both in E; their terms are equal, hence the factor 2
        Ab += 2.0 * (b @ tau[i, j]) * M
        Arot += 2.0 * (np.cross(a, v[i]) @ tau[i, j]) * M
    r2 = combination_value(Ab, bc) - 2.0 * b
    r3 = combination_value(Arot, bc) - 2.0 * np.cross(a, x)
    return {
        "whitney_constant": float(np.abs(r1).max()),
        "tilde_constant": float(np.abs(r2).max()),
        "tilde_rotation": float(np.abs(r3).max()),
    }
