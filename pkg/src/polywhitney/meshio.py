"""Reader and writer for the line-oriented POLYMESH text format.

Grammar (``#`` starts a comment, blank lines are ignored, indices are 0-based)::

    POLYMESH 2
    VERTICES <n>
    <x> <y>                     (n lines)
    CELLS <m>
    <k> <i_0> ... <i_{k-1}>     (m lines, counterclockwise loops)

    POLYMESH 3
    VERTICES <n>
    <x> <y> <z>                 (n lines)
    CELLS <m>
    CELL <nf>                   (then nf face lines, repeated m times)
    <k> <i_0> ... <i_{k-1}>     (face loops; orientation is fixed on read)
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .polymesh import GeometryError, Mesh2D, Polyhedron, make_polyhedron


class PolyMeshFormatError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class PolyMeshData:
    dim: int
    vertices: np.ndarray
    cells: list  # 2D: vertex loops; 3D: lists of face loops

    def to_mesh2d(self) -> Mesh2D:
        if self.dim != 2:
            raise PolyMeshFormatError("not a 2D mesh")
        return Mesh2D(self.vertices, self.cells)

    def polygons(self):
        mesh = self.to_mesh2d()
        return [mesh.polygon(c) for c in range(mesh.n_cells)]

    def polyhedra(self) -> list:
        """One :class:`Polyhedron` per cell, with vertices renumbered locally."""
        if self.dim != 3:
            raise PolyMeshFormatError("not a 3D mesh")
        out = []
        for ci, faces in enumerate(self.cells):
            used = sorted({i for f in faces for i in f})
            local = {g: k for k, g in enumerate(used)}
            try:
                out.append(make_polyhedron(self.vertices[used], [[local[i] for i in f] for f in faces]))
            except GeometryError as err:
                raise GeometryError(f"cell {ci}: {err}") from None
        return out


class _Lines:
    def __init__(self, text):
        self.items = []
        for no, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].strip()
            if body:
                self.items.append((no, body.split()))
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.items):
            last = self.items[-1][0] if self.items else 0
            raise PolyMeshFormatError(f"unexpected end of input, expected {what}", last + 1)
        item = self.items[self.pos]
        self.pos += 1
        return item

    def keyword(self, word):
        no, toks = self.next(word)
        if toks[0].upper() != word or len(toks) != 2:
            raise PolyMeshFormatError(f"expected '{word} <count>'", no)
        return no, _int(toks[1], no)


def _int(tok, no):
    try:
        val = int(tok)
    except ValueError:
        raise PolyMeshFormatError(f"expected an integer, got {tok!r}", no) from None
    return val


def _float(tok, no):
    try:
        return float(tok)
    except ValueError:
        raise PolyMeshFormatError(f"expected a number, got {tok!r}", no) from None


def _loop(toks, no, nverts):
    k = _int(toks[0], no)
    if k < 3:
        raise PolyMeshFormatError(f"a loop needs at least 3 vertices, got {k}", no)
    if len(toks) != k + 1:
        raise PolyMeshFormatError(f"loop declares {k} vertices but lists {len(toks) - 1}", no)
    ids = [_int(t, no) for t in toks[1:]]
    for i in ids:
        if not 0 <= i < nverts:
            raise PolyMeshFormatError(f"vertex index {i} out of range 0..{nverts - 1}", no)
    return ids


def parse_polymesh(text: str) -> PolyMeshData:
    lines = _Lines(text)
    no, toks = lines.next("header")
    if toks[0].upper() != "POLYMESH" or len(toks) != 2 or toks[1] not in ("2", "3"):
        raise PolyMeshFormatError("header must be 'POLYMESH 2' or 'POLYMESH 3'", no)
    dim = int(toks[1])
    no, nv = lines.keyword("VERTICES")
    if nv < 1:
        raise PolyMeshFormatError("vertex count must be positive", no)
    verts = np.empty((nv, dim))
    for k in range(nv):
        no, toks = lines.next("vertex coordinates")
        if len(toks) != dim:
            raise PolyMeshFormatError(f"expected {dim} coordinates, got {len(toks)}", no)
        verts[k] = [_float(t, no) for t in toks]
    no, nc = lines.keyword("CELLS")
    if nc < 1:
        raise PolyMeshFormatError("cell count must be positive", no)
    cells = []
    for _ in range(nc):
        if dim == 2:
            no, toks = lines.next("cell loop")
            cells.append(_loop(toks, no, nv))
        else:
            no, nf = lines.keyword("CELL")
            if nf < 4:
                raise PolyMeshFormatError(f"a polyhedron needs at least 4 faces, got {nf}", no)
            faces = []
            for _ in range(nf):
                no, toks = lines.next("face loop")
                faces.append(_loop(toks, no, nv))
            cells.append(faces)
    if lines.pos != len(lines.items):
        raise PolyMeshFormatError("trailing content after the last cell", lines.items[lines.pos][0])
    return PolyMeshData(dim, verts, cells)


def read_polymesh(path) -> PolyMeshData:
    return parse_polymesh(Path(path).read_text())


def format_polymesh(obj) -> str:
    """Serialize a :class:`Mesh2D`, a :class:`Polyhedron` or a list of polyhedra."""
    out = []
    if isinstance(obj, Mesh2D):
        out += ["POLYMESH 2", f"VERTICES {len(obj.vertices)}"]
        out += [f"{x:.17g} {y:.17g}" for x, y in obj.vertices]
        out.append(f"CELLS {obj.n_cells}")
        out += [" ".join(map(str, [len(c), *c.tolist()])) for c in obj.cells]
        return "\n".join(out) + "\n"
    polys = [obj] if isinstance(obj, Polyhedron) else list(obj)
    verts, cells = [], []
    for p in polys:
        base = len(verts)
        verts.extend(p.vertices.tolist())
        cells.append([[base + i for i in f] for f in p.faces])
    out += ["POLYMESH 3", f"VERTICES {len(verts)}"]
    out += [" ".join(f"{c:.17g}" for c in v) for v in verts]
    out.append(f"CELLS {len(cells)}")
    for faces in cells:
        out.append(f"CELL {len(faces)}")
        out += [" ".join(map(str, [len(f), *f])) for f in faces]
    return "\n".join(out) + "\n"


def write_polymesh(path, obj) -> None:
    Path(path).write_text(format_polymesh(obj))
