"""Numerical toolkit for mixed-state symmetry-protected topological phases."""

__version__ = "0.1.0"
