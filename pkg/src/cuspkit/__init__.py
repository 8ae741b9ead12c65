"""Numerical verification of regularity and cusp identities of one-electron densities."""

__version__ = "0.1.0"
