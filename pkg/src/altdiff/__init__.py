"""Differential cryptanalysis of SPNs under parallel alternative operations."""

__version__ = "0.1.0"
