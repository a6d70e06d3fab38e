"""Numerical laboratory for time-bin/polarization superdense teleportation."""

__version__ = "0.1.0"
