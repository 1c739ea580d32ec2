"""Tridiagonal-initialized Neumann-series MMSE detection for massive MIMO uplinks."""

__version__ = "0.1.0"
