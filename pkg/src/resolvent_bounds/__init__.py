"""Monodromy, inertia and critical-manifold chain bounds for parametric polynomials."""

__version__ = "0.1.0"
