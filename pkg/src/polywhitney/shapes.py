"""Built-in convex polyhedra and a few handy polygons."""

import numpy as np

from .polymesh import Polygon2D, Polyhedron, make_polyhedron


def tetrahedron() -> Polyhedron:
    v = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    return make_polyhedron(v, [(0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2)])


def box(h1=1.0, h2=1.0, h3=1.0) -> Polyhedron:
    """Box (0,h1)x(0,h2)x(0,h3) with the vertex numbering of the tensor basis."""
    v = [
        (0, 0, 0), (h1, 0, 0), (h1, h2, 0), (0, h2, 0),
        (0, 0, h3), (h1, 0, h3), (h1, h2, h3), (0, h2, h3),
    ]
    faces = [
        (0, 3, 2, 1), (4, 5, 6, 7),
        (0, 1, 5, 4), (2, 3, 7, 6),
        (0, 4, 7, 3), (1, 2, 6, 5),
    ]
    return make_polyhedron(v, faces)


def cube() -> Polyhedron:
    return box()


def square_pyramid(height=1.0) -> Polyhedron:
    v = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0.5, 0.5, height)]
    return make_polyhedron(v, [(0, 3, 2, 1), (0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)])


def triangular_prism() -> Polyhedron:
    v = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 1), (0, 1, 1)]
    faces = [(0, 2, 1), (3, 4, 5), (0, 1, 4, 3), (1, 2, 5, 4), (2, 0, 3, 5)]
    return make_polyhedron(v, faces)


def octahedron() -> Polyhedron:
    v = [(0, 0, -1), (1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0), (0, 0, 1)]
    faces = [
        (0, 2, 1), (0, 3, 2), (0, 4, 3), (0, 1, 4),
        (5, 1, 2), (5, 2, 3), (5, 3, 4), (5, 4, 1),
    ]
    return make_polyhedron(v, faces)


def parallelepiped(a=(1.0, 0.0, 0.0), b=(0.4, 1.0, 0.0), c=(0.3, 0.2, 1.0)) -> Polyhedron:
    a, b, c = (np.asarray(t, dtype=float) for t in (a, b, c))
    v = [np.zeros(3), a, a + b, b, c, a + c, a + b + c, b + c]
    faces = [
        (0, 3, 2, 1), (4, 5, 6, 7),
        (0, 1, 5, 4), (2, 3, 7, 6),
        (0, 4, 7, 3), (1, 2, 6, 5),
    ]
    return make_polyhedron(v, faces)


SHAPES = {
    "tetrahedron": tetrahedron,
    "cube": cube,
    "pyramid": square_pyramid,
    "prism": triangular_prism,
    "octahedron": octahedron,
    "parallelepiped": parallelepiped,
}


def get_shape(name: str) -> Polyhedron:
    try:
        return SHAPES[name]()
    except KeyError:
        raise KeyError(f"unknown shape {name!r}; choose from {sorted(SHAPES)}") from None


def regular_polygon(n: int, radius=1.0, center=(0.0, 0.0), phase=0.0) -> Polygon2D:
    t = phase + 2 * np.pi * np.arange(n) / n
    return Polygon2D(np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)]))


def random_convex_polygon(n: int, rng, radius=1.0) -> Polygon2D:
    """Random strictly convex n-gon: sorted random angles on a jittered circle.

    Angles are kept apart so no interior angle gets close to pi.
    """
    while True:
        gaps = rng.uniform(0.5, 1.5, size=n)
        t = np.cumsum(gaps)
        t = 2 * np.pi * t / t[-1] + rng.uniform(0, 2 * np.pi)
        r = radius * rng.uniform(0.85, 1.15, size=n)
        pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
        try:
            poly = Polygon2D(pts)
        except ValueError:
            continue
        e = poly.edge_vectors
        turn = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        sines = turn / (poly.edge_lengths * np.roll(poly.edge_lengths, -1))
        if sines.min() > 0.05 and poly.edge_lengths.min() > 0.05 * poly.diameter:
            return poly
