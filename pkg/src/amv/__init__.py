"""Exact resolution of singularities of affine marked ideals, with effective bounds."""

from .poly import SparsePoly, RationalMapEntry, parse_poly, NEG_INF, INF

__version__ = "0.1.0"

__all__ = ["SparsePoly", "RationalMapEntry", "parse_poly", "NEG_INF", "INF", "__version__"]
