"""Boundary-layer tails and homogenized boundary data for periodic elliptic systems."""

__version__ = "0.1.0"
