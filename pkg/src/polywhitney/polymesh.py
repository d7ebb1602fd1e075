"""Convex polygons, 2D polygonal meshes and convex polyhedra.

Besides plain geometry this module owns the combinatorics the 3D
construction relies on: the fixed edge directions ``E+``, the
classification of every directed vertex segment into edge / face-diagonal /
interior, and the signed face-to-edge and vertex-to-edge incidence
matrices together with their Gram products.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

# segment classes for ordered vertex pairs
SAME = 0
EDGE = 1
FACE_DIAGONAL = 2
INTERIOR = 3

SEGMENT_NAMES = {EDGE: "E", FACE_DIAGONAL: "E_F", INTERIOR: "E_I"}


class GeometryError(ValueError):
    """Input geometry violates a validity requirement."""


class DomainError(ValueError):
    """Query point lies outside the open cell."""


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class Polygon2D:
    """A strictly convex polygon with counterclockwise vertices.

    Edge ``i`` runs from vertex ``i`` to vertex ``i + 1`` (mod n).
    """

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise GeometryError("polygon needs at least 3 vertices in 2D")
        self.vertices = v
        self.vertices.setflags(write=False)
        n = len(v)
        if self.signed_area <= 0.0:
            raise GeometryError("polygon vertices must be counterclockwise")
        e = self.edge_vectors
        turn = _cross2(e, np.roll(e, -1, axis=0))
        scale = self.diameter**2
        if np.any(turn <= 1e-12 * scale):
            bad = int(np.argmin(turn))
            raise GeometryError(
                f"polygon is not strictly convex at vertex {(bad + 1) % n}"
            )

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def edge_vectors(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors, axis=1)

    @cached_property
    def tangents(self) -> np.ndarray:
        return self.edge_vectors / self.edge_lengths[:, None]

    @cached_property
    def normals(self) -> np.ndarray:
        """Unit outward normals, one per edge."""
        t = self.tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    @cached_property
    def signed_area(self) -> float:
        v = self.vertices
        return 0.5 * float(np.sum(_cross2(v, np.roll(v, -1, axis=0))))

    @property
    def area(self) -> float:
        return self.signed_area

    @cached_property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = _cross2(v, w)
        return ((v + w) * cr[:, None]).sum(axis=0) / (6.0 * self.signed_area)

    @cached_property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d**2).sum(axis=-1)).max())

    def edge_distances(self, x) -> np.ndarray:
        """Signed distances from points to the edge lines, positive inside."""
        x = np.asarray(x, dtype=float)
        return np.einsum("ed,...ed->...e", self.normals, self.vertices - x[..., None, :])

    def contains(self, x, tol=0.0) -> np.ndarray:
        return np.all(self.edge_distances(x) > tol, axis=-1)

    def __repr__(self):
        return f"Polygon2D(n={self.n}, area={self.area:.4g})"


@dataclass(frozen=True)
class Mesh2D:
    """Polygonal mesh stored as flat index arrays.

    Global edges are stored as ``(a, b)`` with ``a < b``; the global normal
    of an edge is the outward normal of a cell that traverses it from ``a``
    to ``b``. ``cell_signs[c][k]`` is +1 when cell ``c`` traverses its local
    edge ``k`` in the global direction.
    """

    vertices: np.ndarray
    cells: tuple
    edges: np.ndarray = field(init=False)
    edge_cells: np.ndarray = field(init=False)
    cell_edges: tuple = field(init=False)
    cell_signs: tuple = field(init=False)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        cells = tuple(np.asarray(c, dtype=int) for c in self.cells)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "cells", cells)
        index = {}
        edges, edge_cells, cell_edges, cell_signs = [], [], [], []
        for ci, loop in enumerate(cells):
            if loop.min() < 0 or loop.max() >= len(verts):
                raise GeometryError(f"cell {ci} references a missing vertex")
            if len(set(loop.tolist())) != len(loop):
                raise GeometryError(f"cell {ci} repeats a vertex")
            ids, signs = [], []
            for a, b in zip(loop, np.roll(loop, -1)):
                key = (min(a, b), max(a, b))
                s = 1 if a < b else -1
                if key not in index:
                    index[key] = len(edges)
                    edges.append(key)
                    edge_cells.append([ci, -1, s, 0])
                else:
                    rec = edge_cells[index[key]]
                    if rec[1] != -1:
                        raise GeometryError(f"edge {key} shared by more than two cells")
                    if rec[2] == s:
                        raise GeometryError(
                            f"cells {rec[0]} and {ci} traverse edge {key} in the same direction"
                        )
                    rec[1], rec[3] = ci, s
                ids.append(index[key])
                signs.append(s)
            cell_edges.append(np.array(ids))
            cell_signs.append(np.array(signs))
        object.__setattr__(self, "edges", np.array(edges, dtype=int).reshape(-1, 2))
        ec = np.array(edge_cells, dtype=int).reshape(-1, 4)
        object.__setattr__(self, "edge_cells", ec[:, :2])
        object.__setattr__(self, "cell_edges", tuple(cell_edges))
        object.__setattr__(self, "cell_signs", tuple(cell_signs))
        for ci in range(len(cells)):
            self.polygon(ci)  # validates convexity and orientation

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def _polygons(self) -> dict:
        return {}

    def polygon(self, c: int) -> Polygon2D:
        polys = self._polygons
        if c not in polys:
            try:
                polys[c] = Polygon2D(self.vertices[self.cells[c]])
            except GeometryError as err:
                raise GeometryError(f"cell {c}: {err}") from None
        return polys[c]

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_cells[:, 1] < 0)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    @cached_property
    def h(self) -> float:
        return max(self.polygon(c).diameter for c in range(self.n_cells))

    def total_area(self) -> float:
        return sum(self.polygon(c).area for c in range(self.n_cells))

    def shape_stats(self) -> dict:
        h = self.h
        areas = np.array([self.polygon(c).area for c in range(self.n_cells)])
        return {
            "h": h,
            "min_area_over_h2": float(areas.min() / h**2),
            "min_edge_over_h": float(self.edge_lengths.min() / h),
        }


def _newell_normal(pts):
    nxt = np.roll(pts, -1, axis=0)
    return np.array(
        [
            np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
            np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
            np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
        ]
    )


class Polyhedron:
    """A convex polyhedron whose faces are triangles or parallelograms.

    ``faces`` are vertex loops ordered counterclockwise when seen from
    outside. Construction validates planarity, convexity, face shape,
    closedness and Euler's formula; use :func:`make_polyhedron` to get loops
    oriented automatically.
    """

    def __init__(self, vertices, faces):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise GeometryError("polyhedron vertices must be 3D points")
        self.vertices = v
        self.vertices.setflags(write=False)
        self.faces = tuple(tuple(int(i) for i in f) for f in faces)
        self._validate()

    # -- validation -----------------------------------------------------
    def _validate(self):
        v, n = self.vertices, len(self.vertices)
        h = self.diameter
        used = set()
        for fi, f in enumerate(self.faces):
            if len(f) not in (3, 4):
                raise GeometryError(
                    f"face {fi} has {len(f)} vertices; only triangles and parallelograms are supported"
                )
            if len(set(f)) != len(f) or min(f) < 0 or max(f) >= n:
                raise GeometryError(f"face {fi} has invalid vertex indices")
            used.update(f)
            pts = v[list(f)]
            if len(f) == 4:
                gap = np.linalg.norm(pts[0] - pts[1] + pts[2] - pts[3])
                if gap > 1e-12 * h:
                    raise GeometryError(f"face {fi} is a quadrilateral but not a parallelogram")
            nrm = _newell_normal(pts)
            if np.linalg.norm(nrm) <= 1e-14 * h * h:
                raise GeometryError(f"face {fi} is degenerate")
            nrm = nrm / np.linalg.norm(nrm)
            plane_dev = np.abs((pts - pts.mean(axis=0)) @ nrm).max()
            if plane_dev > 1e-10 * h:
                raise GeometryError(f"face {fi} is not planar")
            e = np.roll(pts, -1, axis=0) - pts
            turn = np.cross(e, np.roll(e, -1, axis=0)) @ nrm
            if np.any(turn <= 1e-12 * h * h):
                raise GeometryError(f"face {fi} is not strictly convex")
            # all other vertices strictly behind the face plane
            side = (v - pts[0]) @ nrm
            side[list(f)] = -1.0
            if np.any(side >= -1e-10 * h):
                if np.all(np.delete(side, list(f)) > 1e-10 * h):
                    raise GeometryError(f"face {fi} loop is oriented inward")
                raise GeometryError(f"polyhedron is not strictly convex at face {fi}")
        if len(used) != n:
            raise GeometryError("some vertices belong to no face")
        directed = {}
        for fi, f in enumerate(self.faces):
            for a, b in zip(f, f[1:] + f[:1]):
                if (a, b) in directed:
                    raise GeometryError(f"directed edge ({a},{b}) appears twice")
                directed[(a, b)] = fi
        for a, b in directed:
            if (b, a) not in directed:
                raise GeometryError(f"edge ({a},{b}) belongs to only one face")
        self._directed = directed
        if not check_euler(self):
            raise GeometryError("Euler's formula #E = #V + #F - 2 fails")

    # -- basic geometry -------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d**2).sum(axis=-1)).max())

    @cached_property
    def face_normals(self) -> np.ndarray:
        out = np.empty((self.n_faces, 3))
        for fi, f in enumerate(self.faces):
            nrm = _newell_normal(self.vertices[list(f)])
            out[fi] = nrm / np.linalg.norm(nrm)
        return out

    @cached_property
    def face_areas(self) -> np.ndarray:
        return np.array(
            [0.5 * np.linalg.norm(_newell_normal(self.vertices[list(f)])) for f in self.faces]
        )

    @cached_property
    def face_offsets(self) -> np.ndarray:
        """``n_f . v`` for any vertex ``v`` on face ``f``."""
        return np.array(
            [self.face_normals[fi] @ self.vertices[f[0]] for fi, f in enumerate(self.faces)]
        )

    @cached_property
    def face_centroids(self) -> np.ndarray:
        return np.array([self.vertices[list(f)].mean(axis=0) for f in self.faces])

    @cached_property
    def volume(self) -> float:
        return float(np.sum(self.face_offsets * self.face_areas) / 3.0)

    @cached_property
    def centroid(self) -> np.ndarray:
        """Vertex centroid (always interior for a convex polyhedron)."""
        return self.vertices.mean(axis=0)

    def face_distances(self, x) -> np.ndarray:
        """Distances from points to the face planes, positive inside."""
        x = np.asarray(x, dtype=float)
        return self.face_offsets - x @ self.face_normals.T

    def contains(self, x, tol=0.0) -> np.ndarray:
        return np.all(self.face_distances(x) > tol, axis=-1)

    # -- combinatorics --------------------------------------------------
    @cached_property
    def edges(self) -> list:
        """``E+``: each undirected edge once, pointing low index -> high index."""
        return sorted({(min(a, b), max(a, b)) for a, b in self._directed})

    @cached_property
    def edge_index(self) -> dict:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(#E, 2) array: face to the left / right of each ``E+`` edge.

        The left face is the one whose oriented loop contains the edge in its
        ``E+`` direction.
        """
        return np.array([[self._directed[(a, b)], self._directed[(b, a)]] for a, b in self.edges])

    @cached_property
    def neighbors(self) -> list:
        nb = [set() for _ in range(self.n)]
        for a, b in self.edges:
            nb[a].add(b)
            nb[b].add(a)
        return [sorted(s) for s in nb]

    @cached_property
    def vertex_faces(self) -> list:
        """Faces around each vertex, in cyclic order.

        Walking from face ``f`` across its outgoing edge ``(v, next)`` lands on
        the face that contains ``(next, v)``.
        """
        out = []
        for v in range(self.n):
            start = next(fi for fi, f in enumerate(self.faces) if v in f)
            ring, fi = [], start
            while True:
                ring.append(fi)
                f = self.faces[fi]
                nxt = f[(f.index(v) + 1) % len(f)]
                fi = self._directed[(nxt, v)]
                if fi == start:
                    break
            out.append(ring)
        return out

    @cached_property
    def segment_classes(self) -> np.ndarray:
        return classify_segments(self)

    def face_polygon(self, fi: int):
        """Face ``fi`` as a :class:`Polygon2D` in an in-plane orthonormal frame.

        Returns ``(polygon, origin, frame)`` where ``frame`` is 2x3 with rows
        spanning the face plane such that the loop stays counterclockwise.
        """
        f = self.faces[fi]
        pts = self.vertices[list(f)]
        nrm = self.face_normals[fi]
        t1 = pts[1] - pts[0]
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(nrm, t1)
        frame = np.vstack([t1, t2])
        origin = pts[0]
        return Polygon2D((pts - origin) @ frame.T), origin, frame

    def __repr__(self):
        return f"Polyhedron(V={self.n}, E={self.n_edges}, F={self.n_faces})"


def make_polyhedron(vertices, faces) -> Polyhedron:
    """Build a polyhedron, reversing any face loop that points inward."""
    v = np.asarray(vertices, dtype=float)
    c = v.mean(axis=0)
    fixed = []
    for f in faces:
        f = list(f)
        nrm = _newell_normal(v[f])
        if nrm @ (v[f].mean(axis=0) - c) < 0:
            f = f[::-1]
        fixed.append(f)
    return Polyhedron(v, fixed)


def check_euler(poly: Polyhedron) -> bool:
    undirected = {(min(a, b), max(a, b)) for f in poly.faces for a, b in zip(f, f[1:] + f[:1])}
    return len(undirected) == poly.n + len(poly.faces) - 2


def classify_segments(poly: Polyhedron) -> np.ndarray:
    """Label every ordered vertex pair as EDGE, FACE_DIAGONAL or INTERIOR.

    For a strictly convex polyhedron with convex faces, a segment lies on the
    boundary exactly when both endpoints share a face.
    """
    n = poly.n
    cls = np.full((n, n), INTERIOR, dtype=int)
    for f in poly.faces:
        for a in f:
            for b in f:
                cls[a, b] = FACE_DIAGONAL
    for a, b in poly.edges:
        cls[a, b] = cls[b, a] = EDGE
    np.fill_diagonal(cls, SAME)
    return cls


@dataclass(frozen=True)
class AdjacencyMatrices:
    AFtoE: np.ndarray
    AVtoE: np.ndarray
    MF: np.ndarray
    MV: np.ndarray
    edges: tuple

    @property
    def A(self) -> np.ndarray:
        """Coefficient matrix ``[AVtoE AFtoE]`` of the edge-duality system."""
        return np.hstack([self.AVtoE, self.AFtoE])


def build_adjacency(poly: Polyhedron, eplus=None) -> AdjacencyMatrices:
    """Signed incidence matrices for a fixed edge direction list ``eplus``."""
    eplus = list(poly.edges) if eplus is None else [tuple(e) for e in eplus]
    undirected = {(min(a, b), max(a, b)) for a, b in eplus}
    if len(undirected) != len(eplus) or undirected != set(poly.edges):
        raise GeometryError("eplus must list every edge exactly once")
    ne = len(eplus)
    af = np.zeros((ne, poly.n_faces), dtype=np.int64)
    av = np.zeros((ne, poly.n), dtype=np.int64)
    for k, (a, b) in enumerate(eplus):
        af[k, poly._directed[(a, b)]] = 1
        af[k, poly._directed[(b, a)]] = -1
        av[k, a] = -1
        av[k, b] = 1
    return AdjacencyMatrices(af, av, af.T @ af, av.T @ av, tuple(eplus))
