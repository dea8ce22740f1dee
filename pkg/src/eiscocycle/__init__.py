"""Eisenstein cocycle over imaginary quadratic fields and partial Hecke L-values."""

__version__ = "0.1.0"
