"""Polygonal meshes of the unit square: distorted quads, hexagonal duals, CVTs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Voronoi

from .polymesh import Mesh2D, Polygon2D
from .quadrature import polygon_rule

FAMILIES = ("quad", "hexdual", "cvt")


@dataclass(frozen=True)
class MeshSpec:
    family: str
    n: int
    distortion: float = 0.3
    iters: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown mesh family {self.family!r}; choose from {FAMILIES}")
        if self.n < 2:
            raise ValueError("mesh resolution must be at least 2")

    def build(self) -> Mesh2D:
        if self.family == "quad":
            return gen_quad(self.n, self.distortion)
        if self.family == "hexdual":
            return gen_hexdual(self.n)
        return gen_cvt(self.n, self.iters, self.seed)


def gen_quad(n: int, distortion: float = 0.3) -> Mesh2D:
    """N x N quads; interior vertex (i, j) moves by ``(d/N) cos(pi (i + j))`` in x.

    The alternating shift turns every interior cell into a trapezoid, and
    the cells stay non-parallelograms at every refinement level.
    """
    if n < 2:
        raise ValueError("mesh resolution must be at least 2")
    if not 0.0 <= distortion < 0.5:
        raise ValueError("distortion must lie in [0, 0.5)")
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    x = i / n
    y = j / n
    interior = (i > 0) & (i < n) & (j > 0) & (j < n)
    x = x + np.where(interior, distortion / n * np.cos(np.pi * (i + j)), 0.0)
    verts = np.column_stack([x.ravel(), y.ravel()])

    def vid(a, b):
        return a * (n + 1) + b

    cells = [
        (vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1))
        for b in range(n)
        for a in range(n)
    ]
    return Mesh2D(verts, cells)


def _ccw_loop(points, ids):
    c = points[ids].mean(axis=0)
    ang = np.arctan2(points[ids, 1] - c[1], points[ids, 0] - c[0])
    return [ids[k] for k in np.argsort(ang)]


def gen_hexdual(n: int) -> Mesh2D:
    """Barycentric dual of the N x N right-triangle mesh with diagonals (i,j)-(i+1,j+1).

    The dual cell of a primal vertex joins the centroids of its triangles;
    boundary cells close through boundary-edge midpoints and, at corners,
    the corner itself. Interior cells are hexagons.
    """
    if n < 2:
        raise ValueError("mesh resolution must be at least 2")

    def pid(a, b):
        return a * (n + 1) + b

    prim = np.array([(a / n, b / n) for a in range(n + 1) for b in range(n + 1)])
    tris = []
    for a in range(n):
        for b in range(n):
            tris.append((pid(a, b), pid(a + 1, b), pid(a + 1, b + 1)))
            tris.append((pid(a, b), pid(a + 1, b + 1), pid(a, b + 1)))
    points = [prim[list(t)].mean(axis=0) for t in tris]
    star = [[] for _ in range(len(prim))]
    edge_tris = {}
    for k, t in enumerate(tris):
        for v in t:
            star[v].append(k)
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            edge_tris.setdefault((min(a, b), max(a, b)), []).append(k)
    # boundary midpoints, keyed by primal edge
    mid = {}
    for e, ts in edge_tris.items():
        if len(ts) == 1:
            mid[e] = len(points)
            points.append(0.5 * (prim[e[0]] + prim[e[1]]))
    corner = {}
    for v in (pid(0, 0), pid(n, 0), pid(n, n), pid(0, n)):
        corner[v] = len(points)
        points.append(prim[v])
    points = np.array(points)
    points[np.abs(points) < 1e-15] = 0.0
    cells = []
    for v in range(len(prim)):
        ids = list(star[v])
        ids += [m for e, m in mid.items() if v in e]
        if v in corner:
            ids.append(corner[v])
        cells.append(_ccw_loop(points, np.array(ids)))
    return Mesh2D(points, cells)


# centroidal Voronoi --------------------------------------------------------


def jittered_generators(n: int, seed: int = 0, jitter: float = 0.5) -> np.ndarray:
    """One generator per cell of the N x N grid, moved by up to ``jitter / (2N)``."""
    rng = np.random.default_rng(seed)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    base = np.column_stack([(i.ravel() + 0.5) / n, (j.ravel() + 0.5) / n])
    return base + jitter / n * rng.uniform(-0.5, 0.5, size=base.shape)


def _mirrored_voronoi(g) -> Voronoi:
    pts = [g]
    for axis in (0, 1):
        for wall in (0.0, 1.0):
            r = g.copy()
            r[:, axis] = 2 * wall - r[:, axis]
            pts.append(r)
    return Voronoi(np.vstack(pts))


def _region_edges(vor, m):
    """Flat (cell, start, end) arrays of the CCW-sorted edges of the first m regions."""
    cell, vid = [], []
    for k in range(m):
        region = vor.regions[vor.point_region[k]]
        if -1 in region or not region:
            raise RuntimeError(f"unbounded Voronoi cell for generator {k}")
        cell.extend([k] * len(region))
        vid.extend(region)
    cell, vid = np.array(cell), np.array(vid)
    p = vor.vertices[vid]
    counts = np.bincount(cell, minlength=m)
    centre = np.column_stack([np.bincount(cell, p[:, d], m) for d in (0, 1)]) / counts[:, None]
    ang = np.arctan2(p[:, 1] - centre[cell, 1], p[:, 0] - centre[cell, 0])
    order = np.lexsort((ang, cell))
    cell, p = cell[order], p[order]
    first = np.r_[0, np.cumsum(counts)[:-1]]
    pos = np.arange(len(cell)) - first[cell]
    nxt = first[cell] + (pos + 1) % counts[cell]
    return cell, p, p[nxt]


def cell_moments(gens):
    """Areas, centroids and CVT energies of the clipped Voronoi cells of ``gens``."""
    g = np.asarray(gens, dtype=float)
    m = len(g)
    cell, a, b = _region_edges(_mirrored_voronoi(g), m)
    a = a - g[cell]
    b = b - g[cell]
    cr = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    area = 0.5 * np.bincount(cell, cr, m)
    first = np.column_stack([np.bincount(cell, cr * (a[:, d] + b[:, d]), m) for d in (0, 1)])
    centroid = g + first / (6.0 * area[:, None])
    sq = (a**2 + a * b + b**2).sum(axis=1)
    energy = np.bincount(cell, cr * sq, m) / 12.0
    return area, centroid, energy


def voronoi_cells(gens) -> tuple:
    """Voronoi cells of ``gens`` clipped to the unit square.

    Generators are mirrored across the four sides, so the cells of the
    originals end exactly on the boundary. Returns (vertices, cells) with
    near-coincident Voronoi vertices merged.
    """
    g = np.asarray(gens, dtype=float)
    m = len(g)
    vor = _mirrored_voronoi(g)
    tol = 1e-9
    raw = vor.vertices.copy()
    raw[np.abs(raw) < tol] = 0.0
    raw[np.abs(raw - 1.0) < tol] = 1.0
    keys = {}
    verts = []
    remap = np.full(len(raw), -1)
    for k, p in enumerate(raw):
        key = tuple(np.round(p / tol).astype(np.int64))
        hit = None
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                hit = keys.get((key[0] + dx, key[1] + dy))
                if hit is not None:
                    break
            if hit is not None:
                break
        if hit is None:
            hit = len(verts)
            keys[key] = hit
            verts.append(p)
        remap[k] = hit
    verts = np.array(verts)
    cells = []
    for k in range(m):
        region = vor.regions[vor.point_region[k]]
        if -1 in region or not region:
            raise RuntimeError(f"unbounded Voronoi cell for generator {k}")
        ids = list(dict.fromkeys(int(remap[r]) for r in region))
        cells.append(_ccw_loop(verts, np.array(ids)))
    used = sorted({v for c in cells for v in c})
    new = {v: k for k, v in enumerate(used)}
    return verts[used], [[new[v] for v in c] for c in cells]


def lloyd_energy(gens, verts, cells) -> float:
    """CVT energy ``sum_k int_{V_k} |x - g_k|^2`` by polygon quadrature."""
    total = 0.0
    for g, c in zip(gens, cells):
        rule = polygon_rule(Polygon2D(verts[c]), 2)
        total += rule.integrate(np.sum((rule.nodes - g) ** 2, axis=1))
    return float(total)


def lloyd(gens, iters: int):
    """Lloyd iterations; returns the final generators and the energy history."""
    g = np.asarray(gens, dtype=float)
    energies = []
    for _ in range(iters):
        _, centroid, energy = cell_moments(g)
        energies.append(float(energy.sum()))
        g = centroid
    return g, energies


def gen_cvt(n: int, iters: int = 64, seed: int = 0, jitter: float = 0.5) -> Mesh2D:
    """Clipped Voronoi mesh of N^2 seeded generators after ``iters`` Lloyd steps."""
    if n < 2:
        raise ValueError("mesh resolution must be at least 2")
    if iters < 0:
        raise ValueError("iteration count must be non-negative")
    g, _ = lloyd(jittered_generators(n, seed, jitter), iters)
    verts, cells = voronoi_cells(g)
    return Mesh2D(verts, cells)
