"""Exact and numerical verification of a boundary-bubble blow-up construction."""

__version__ = "0.1.0"
