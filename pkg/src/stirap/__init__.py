"""Optimally truncated Gaussian STIRAP: pulse design and Schrodinger verification."""

__version__ = "0.1.0"
