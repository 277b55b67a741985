"""Numerical laboratory for orbit equidistribution in the hyperbolic disk."""

__version__ = "0.1.0"
