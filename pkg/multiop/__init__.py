"""Exact multiple orthogonal polynomials, certified zeros and their limit densities."""

__version__ = "1.0.0"
