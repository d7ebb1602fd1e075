import numpy as np
import pytest

from polywhitney.elem3d import build_elements
from polywhitney.shapes import SHAPES, get_shape, random_convex_polygon

# The five shapes with worked examples plus one extra Type II cell.
CORE_SHAPES = ("tetrahedron", "cube", "pyramid", "prism", "octahedron")
ALL_SHAPES = tuple(sorted(SHAPES))

# Filled in by test_acceptance.py, printed at the end of the session.
ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def elements():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = build_elements(get_shape(name))
        return cache[name]

    return get


def random_polygons(count, seed=0, nmin=3, nmax=10):
    rng = np.random.default_rng(seed)
    return [random_convex_polygon(int(rng.integers(nmin, nmax + 1)), rng) for _ in range(count)]


def interior_points(poly, count, rng, shrink=0.9):
    """Random points in a convex cell, pulled towards the vertex mean."""
    v = poly.vertices
    w = rng.dirichlet(np.ones(len(v)), size=count)
    c = v.mean(axis=0)
    return c + shrink * (w @ v - c)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        ok, detail = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
