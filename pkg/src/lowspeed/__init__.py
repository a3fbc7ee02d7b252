"""Finite-stage simulator for a minimal-degree, low-for-speed forcing construction."""

__version__ = "0.1.0"
