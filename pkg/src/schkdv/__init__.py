"""Pseudospectral laboratory for the coupled Schrodinger-KdV system."""

__version__ = "0.1.0"
