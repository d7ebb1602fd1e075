"""Command-line interface: ``polywhitney <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import elem2d, elem3d, gbc, meshgen, mixedfem
from .meshio import PolyMeshFormatError, format_polymesh, read_polymesh
from .polymesh import DomainError, GeometryError
from .shapes import SHAPES, get_shape

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _emit(text: str, path=None):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(type(o).__name__)

    return json.dumps(obj, indent=2, default=default) + "\n"


def _polyhedron(args):
    if getattr(args, "shape", None):
        return get_shape(args.shape)
    if not getattr(args, "input", None):
        raise InputError("give a polytope file or --shape")
    data = read_polymesh(args.input)
    if data.dim != 3:
        raise InputError("expected a POLYMESH 3 file")
    polys = data.polyhedra()
    if not 0 <= args.cell < len(polys):
        raise InputError(f"cell {args.cell} out of range (file has {len(polys)})")
    return polys[args.cell]


def _polygon(args):
    data = read_polymesh(args.input)
    if data.dim != 2:
        raise InputError("expected a POLYMESH 2 file")
    polys = data.polygons()
    if not 0 <= args.cell < len(polys):
        raise InputError(f"cell {args.cell} out of range (file has {len(polys)})")
    return polys[args.cell]


def _parse_points(text: str, dim: int) -> np.ndarray:
    try:
        pts = np.array([[float(c) for c in p.split(",")] for p in text.split(";") if p.strip()])
    except ValueError:
        raise InputError(f"cannot parse points {text!r}; use 'x,y;x,y' or 'x,y,z;...'") from None
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise InputError(f"points must have {dim} coordinates each")
    return pts


# subcommands ---------------------------------------------------------------


def cmd_meshgen(args) -> int:
    spec = meshgen.MeshSpec(args.family, args.n, args.distortion, args.iters, args.seed)
    mesh = spec.build()
    _emit(format_polymesh(mesh), args.output)
    if args.output:
        stats = mesh.shape_stats()
        print(f"{args.family} N={args.n}: {mesh.n_cells} cells, {mesh.n_edges} edges, "
              f"h={stats['h']:.4g}, min|T|/h^2={stats['min_area_over_h2']:.3g}, "
              f"min|e|/h={stats['min_edge_over_h']:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_gbc_eval(args) -> int:
    if args.shape or (args.input and read_polymesh(args.input).dim == 3):
        cell, dim = _polyhedron(args), 3
    elif args.input:
        cell, dim = _polygon(args), 2
    else:
        raise InputError("give a mesh file or --shape")
    pts = _parse_points(args.points, dim)
    bc = gbc.evaluate(cell, pts)
    out = [
        {"x": x, "lambda": lam, "grad": g}
        for x, lam, g in zip(pts, bc.values, bc.gradients)
    ]
    _emit(_json({"points": out, "residuals": bc.residuals(cell.vertices)}), args.output)
    return EXIT_OK


def cmd_basis2d(args) -> int:
    poly = _polygon(args)
    basis = elem2d.build_basis2d(poly)
    tr = elem2d.duality_matrix(basis)
    per_edge = np.abs(tr - np.eye(poly.n)[:, :, None]).max(axis=(0, 2))
    report = {
        "vertices": poly.vertices,
        "xstar": basis.xstar,
        "c0": basis.c0,
        "c": basis.c,
        "divergence": basis.divergence,
        "duality_residual_per_edge": per_edge,
    }
    _emit(_json(report), args.output)
    return EXIT_OK if per_edge.max() < 1e-6 else EXIT_FAIL


def _report3d(args, with_tables: bool):
    poly = _polyhedron(args)
    center = None if args.center is None else _parse_points(args.center, 3)[0]
    el = elem3d.build_elements(poly)
    report = elem3d.verification_report(poly, center, el)
    if with_tables:
        report["hdiv"] = {"xstar": el.hdiv.xstar, "c0": el.hdiv.c0, "c": el.hdiv.c}
        report["hcurl"] = {"edges": [list(e) for e in el.adjacency.edges], "a": el.hcurl.a, "b": el.hcurl.b}
    return report


def cmd_basis3d(args) -> int:
    report = _report3d(args, True)
    _emit(_json(report), args.output)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_verify(args) -> int:
    report = _report3d(args, False)
    _emit(_json(report), args.output)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_convergence(args) -> int:
    try:
        levels = [int(v) for v in args.levels.split(",")]
    except ValueError:
        raise InputError(f"cannot parse levels {args.levels!r}") from None
    kwargs = {"seed": args.seed, "iters": args.iters, "distortion": args.distortion}
    report = mixedfem.convergence_study(args.family, levels, args.problem, **kwargs)
    _emit(report.to_csv(), args.output)
    return EXIT_OK


def cmd_basis_dump(args) -> int:
    poly = _polygon(args)
    basis = elem2d.build_basis2d(poly)
    lo, hi = poly.vertices.min(axis=0), poly.vertices.max(axis=0)
    axes = [np.linspace(a, b, args.grid + 2)[1:-1] for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    pts = pts[np.all(poly.edge_distances(pts) > 1e-9 * poly.diameter, axis=1)]
    q = basis.evaluate(pts)
    if args.format == "json":
        tables = [{"edge": i, "samples": np.column_stack([pts, q[:, i]])} for i in range(poly.n)]
        _emit(_json({"c0": basis.c0, "c": basis.c, "xstar": basis.xstar, "fields": tables}), args.output)
    else:
        lines = ["basis,x,y,qx,qy"]
        for i in range(poly.n):
            lines += [f"{i},{x:.12g},{y:.12g},{a:.12g},{b:.12g}" for (x, y), (a, b) in zip(pts, q[:, i])]
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polywhitney", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("meshgen", help="generate a unit-square polygonal mesh")
    p.add_argument("--family", choices=meshgen.FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True, help="resolution N (mesh is N x N)")
    p.add_argument("--distortion", type=float, default=0.3, help="quad distortion d in [0, 0.5) (default 0.3)")
    p.add_argument("--seed", type=int, default=0, help="CVT seed (default 0)")
    p.add_argument("--iters", type=int, default=64, help="CVT Lloyd iterations (default 64)")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_meshgen)

    def cell_args(p, shape=True):
        p.add_argument("input", nargs="?", help="POLYMESH file")
        p.add_argument("--cell", type=int, default=0, help="cell index in the file (default 0)")
        if shape:
            p.add_argument("--shape", choices=sorted(SHAPES), help="built-in polyhedron instead of a file")
        p.add_argument("-o", "--output", help="output file (default stdout)")

    p = sub.add_parser("gbc-eval", help="print Wachspress coordinates and gradients at points")
    cell_args(p)
    p.add_argument("--points", required=True, help="'x,y;x,y' (2D) or 'x,y,z;...' (3D)")
    p.set_defaults(func=cmd_gbc_eval)

    p = sub.add_parser("basis2d", help="H(div) coefficient table and duality residuals of a polygon")
    cell_args(p, shape=False)
    p.set_defaults(func=cmd_basis2d)

    for name, func, text in (
        ("basis3d", cmd_basis3d, "build both 3D bases and report coefficients and checks"),
        ("verify", cmd_verify, "run the 3D verification suite on a polyhedron"),
    ):
        p = sub.add_parser(name, help=text)
        cell_args(p)
        p.add_argument("--center", help="candidate center 'x,y,z' for the type test (default vertex centroid)")
        p.set_defaults(func=func)

    p = sub.add_parser("convergence", help="mixed Poisson convergence study")
    p.add_argument("--family", choices=meshgen.FAMILIES, required=True)
    p.add_argument("--levels", default="4,8,16,32", help="comma-separated N values (default 4,8,16,32)")
    p.add_argument("--problem", choices=sorted(mixedfem.PROBLEMS), default="smooth")
    p.add_argument("--distortion", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=64)
    p.add_argument("-o", "--output", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("basis-dump", help="sample the 2D basis on a grid for plotting")
    cell_args(p, shape=False)
    p.add_argument("--grid", type=int, default=20, help="grid points per direction (default 20)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_basis_dump)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, PolyMeshFormatError, GeometryError, DomainError, OSError, KeyError, ValueError) as err:
        msg = err.args[0] if isinstance(err, KeyError) and err.args else err
        print(f"polywhitney {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
