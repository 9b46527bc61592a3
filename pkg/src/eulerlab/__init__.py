"""Numerical checks for double-exponential vorticity gradient growth in a quadrant."""

__version__ = "0.1.0"
