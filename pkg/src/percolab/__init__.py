"""Continuum percolation of a secondary network overlaid on a primary Poisson network."""

__version__ = "0.1.0"
