"""Mixed finite elements for ``-Lap u = f`` on the unit square.

Unknowns are the flux ``p = grad u`` (one normal-flux DOF per global edge)
and a piecewise constant ``u``. The discrete system is

    M sigma + B^T U = G      (p, tau) + (u, div tau) = <g, tau . n>
    B sigma         = -F     (div p, v) = -(f, v)

with ``B[T, e] = s_{T,e} |e|`` because every local basis function has
constant divergence ``|e| / |T|``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .elem2d import HdivBasis2D, build_basis2d
from .meshgen import MeshSpec
from .polymesh import Mesh2D
from .quadrature import DEFAULT_DEGREE, PolygonRule, edge_rule, polygon_rule

# manufactured problems -----------------------------------------------------


@dataclass(frozen=True)
class Problem:
    name: str
    u: object
    p: object  # grad u
    f: object  # -Lap u
    g: object  # Dirichlet data on the boundary

    def div_p(self, x):
        return -np.asarray(self.f(x))


def _smooth():
    pi = np.pi

    def u(x):
        return np.sin(pi * x[..., 0]) * np.sin(pi * x[..., 1])

    def p(x):
        sx, sy = np.sin(pi * x[..., 0]), np.sin(pi * x[..., 1])
        cx, cy = np.cos(pi * x[..., 0]), np.cos(pi * x[..., 1])
        return pi * np.stack([cx * sy, sx * cy], axis=-1)

    def f(x):
        return 2 * pi**2 * u(x)

    return Problem("smooth", u, p, f, lambda x: np.zeros(x.shape[:-1]))


def _rough():
    # u = sqrt((rho - x)/2) - rho^2/4, written as y / sqrt(2 (rho + x)) for y >= 0
    def s(x):
        rho = np.hypot(x[..., 0], x[..., 1])
        return x[..., 1] / np.sqrt(2.0 * (rho + x[..., 0])), rho

    def u(x):
        val, rho = s(x)
        return val - 0.25 * rho**2

    def p(x):
        val, rho = s(x)
        dx = -val / (2.0 * rho) - 0.5 * x[..., 0]
        dy = np.sqrt(2.0 * (rho + x[..., 0])) / (4.0 * rho) - 0.5 * x[..., 1]
        return np.stack([dx, dy], axis=-1)

    def f(x):
        return np.ones(x.shape[:-1])

    return Problem("rough", u, p, f, u)



PROBLEMS = {"smooth": _smooth, "rough": _rough}


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def make_problem(u, p, f, g=None, name="custom") -> Problem:
    """Problem from callables; ``g`` defaults to ``u`` on the boundary."""
    return Problem(name, u, p, f, u if g is None else g)


# assembly --------------------------------------------------------------------


@dataclass
class DofMap:
    """Flux DOF per global edge, scalar DOF per cell, and the local signs."""

    n_edges: int
    n_cells: int
    cell_edges: tuple
    cell_signs: tuple

    @classmethod
    def from_mesh(cls, mesh: Mesh2D) -> "DofMap":
        return cls(mesh.n_edges, mesh.n_cells, mesh.cell_edges, mesh.cell_signs)

    @property
    def size(self) -> int:
        return self.n_edges + self.n_cells


# The basis is rational and its poles can sit close to a cell, so the mass
# matrix gets a finer rule than the load and error integrals.
MASS_DEGREE = 20


@dataclass
class CellData:
    basis: HdivBasis2D
    rule: PolygonRule  # load / error rule
    values: np.ndarray  # basis at ``rule`` nodes, (P, n, 2)


@dataclass
class SaddleSystem:
    mesh: Mesh2D
    dofs: DofMap
    M: sp.csr_matrix
    B: sp.csr_matrix
    G: np.ndarray  # boundary data in the flux equation
    F: np.ndarray  # cell integrals of f
    cells: list = field(repr=False)

    @property
    def matrix(self) -> sp.csc_matrix:
        return sp.bmat([[self.M, self.B.T], [self.B, None]], format="csc")

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([self.G, -self.F])


def assemble(mesh: Mesh2D, f, g=None, degree: int = DEFAULT_DEGREE, edge_points: int = 10,
             mass_degree: int = MASS_DEGREE) -> SaddleSystem:
    """Assemble the saddle-point system; ``g=None`` means homogeneous data."""
    dofs = DofMap.from_mesh(mesh)
    rows, cols, vals = [], [], []
    brow, bcol, bval = [], [], []
    F = np.zeros(mesh.n_cells)
    cells = []
    for c in range(mesh.n_cells):
        poly = mesh.polygon(c)
        basis = build_basis2d(poly)
        rule = polygon_rule(poly, degree)
        q = basis.evaluate(rule.nodes)
        ids, sg = mesh.cell_edges[c], mesh.cell_signs[c]
        local = basis.mass_matrix(mass_degree) * np.outer(sg, sg)
        rows.append(np.repeat(ids, len(ids)))
        cols.append(np.tile(ids, len(ids)))
        vals.append(local.ravel())
        brow.append(np.full(len(ids), c))
        bcol.append(ids)
        bval.append(sg * poly.edge_lengths)
        F[c] = rule.integrate(np.asarray(f(rule.nodes)))
        cells.append(CellData(basis, rule, q))
    ne = mesh.n_edges
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(ne, ne))
    B = sp.csr_matrix(
        (np.concatenate(bval), (np.concatenate(brow), np.concatenate(bcol))), shape=(mesh.n_cells, ne)
    )
    G = np.zeros(ne)
    if g is not None:
        for e in mesh.boundary_edges:
            c = mesh.edge_cells[e, 0]
            k = int(np.flatnonzero(mesh.cell_edges[c] == e)[0])
            s = mesh.cell_signs[c][k]
            a, b = mesh.vertices[mesh.edges[e]]
            x, w = edge_rule(a, b, edge_points)
            G[e] = s * (w @ np.asarray(g(x)))
    return SaddleSystem(mesh, dofs, M, B, G, F, cells)


@dataclass
class MixedSolution:
    sigma: np.ndarray  # global edge fluxes
    u: np.ndarray  # cell values
    residual: float  # relative residual of the saddle system


def solve(system: SaddleSystem) -> MixedSolution:
    K = system.matrix
    rhs = system.rhs
    x = spsolve(K, rhs)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("saddle-point factorization failed (singular system)")
    res = np.linalg.norm(K @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    ne = system.dofs.n_edges
    return MixedSolution(x[:ne], x[ne:], float(res))


def local_flux(system: SaddleSystem, sol: MixedSolution, c: int) -> np.ndarray:
    """Coefficients of p_h on cell ``c`` in its local basis."""
    return sol.sigma[system.mesh.cell_edges[c]] * system.mesh.cell_signs[c]


def flux_values(system: SaddleSystem, sol: MixedSolution, c: int, x) -> np.ndarray:
    return system.cells[c].basis.combine(local_flux(system, sol, c), x)


def cell_divergence(system: SaddleSystem, sol: MixedSolution) -> np.ndarray:
    """Constant div p_h on each cell."""
    areas = np.array([d.basis.poly.area for d in system.cells])
    return (system.B @ sol.sigma) / areas


@dataclass
class ErrorTriple:
    p: float
    div_p: float
    u: float


def errors(system: SaddleSystem, sol: MixedSolution, p, u, div_p) -> ErrorTriple:
    """L2 errors of flux, divergence and scalar, using the assembly quadrature."""
    divh = cell_divergence(system, sol)
    ep = ed = eu = 0.0
    for c, data in enumerate(system.cells):
        x, w = data.rule.nodes, data.rule.weights
        ph = np.einsum("i,pid->pd", local_flux(system, sol, c), data.values)
        ep += w @ np.sum((np.asarray(p(x)) - ph) ** 2, axis=1)
        ed += w @ (np.asarray(div_p(x)) - divh[c]) ** 2
        eu += w @ (np.asarray(u(x)) - sol.u[c]) ** 2
    return ErrorTriple(float(np.sqrt(ep)), float(np.sqrt(ed)), float(np.sqrt(eu)))


def solve_problem(mesh: Mesh2D, problem: Problem, degree: int = DEFAULT_DEGREE,
                  mass_degree: int = MASS_DEGREE):
    system = assemble(mesh, problem.f, problem.g, degree, mass_degree=mass_degree)
    sol = solve(system)
    return system, sol, errors(system, sol, problem.p, problem.u, problem.div_p)


# convergence -----------------------------------------------------------------


@dataclass
class LevelResult:
    n: int
    h: float
    err: ErrorTriple
    residual: float


@dataclass
class ConvergenceReport:
    family: str
    problem: str
    levels: list

    @property
    def include_div(self) -> bool:
        # div p = div p_h = -1 exactly for the rough problem
        return self.problem != "rough"

    def orders(self, attr: str) -> list:
        out = [None]
        for a, b in zip(self.levels, self.levels[1:]):
            ea, eb = getattr(a.err, attr), getattr(b.err, attr)
            out.append(float(np.log(ea / eb) / np.log(b.n / a.n)) if ea > 0 and eb > 0 else None)
        return out

    def final_orders(self) -> dict:
        keys = ("p", "div_p", "u") if self.include_div else ("p", "u")
        return {k: self.orders(k)[-1] for k in keys}

    def rows(self) -> list:
        op, od, ou = self.orders("p"), self.orders("div_p"), self.orders("u")
        rows = []
        for k, lv in enumerate(self.levels):
            row = {"N": lv.n, "h": lv.h, "err_p": lv.err.p, "ord_p": op[k]}
            if self.include_div:
                row.update(err_divp=lv.err.div_p, ord_divp=od[k])
            row.update(err_u=lv.err.u, ord_u=ou[k])
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else (f"{v:.6e}" if isinstance(v, float) else v))
                             for k, v in r.items()})
        return buf.getvalue()


def convergence_study(family: str, levels, problem="smooth", degree: int = DEFAULT_DEGREE,
                      mass_degree: int = MASS_DEGREE, **mesh_kwargs) -> ConvergenceReport:
    prob = get_problem(problem) if isinstance(problem, str) else problem
    out = []
    for n in levels:
        mesh = MeshSpec(family, int(n), **mesh_kwargs).build()
        _, sol, err = solve_problem(mesh, prob, degree, mass_degree)
        out.append(LevelResult(int(n), mesh.h, err, sol.residual))
    return ConvergenceReport(family, prob.name, out)
