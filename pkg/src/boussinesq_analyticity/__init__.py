"""Pseudo-spectral 2D inviscid Boussinesq solver with analyticity-radius diagnostics."""

__version__ = "0.1.0"
