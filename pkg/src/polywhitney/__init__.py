"""Generalized barycentric Whitney forms and mixed finite elements on convex polytopes."""

__version__ = "0.1.0"
