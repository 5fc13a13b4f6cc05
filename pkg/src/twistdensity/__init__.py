"""Desk-scale numerical checks for one-level densities of quadratic twists."""

__version__ = "0.1.0"
