"""Spinor representation of surfaces in three-dimensional Lie groups."""

__version__ = "0.1.0"
