"""Combinatorics and numerics for compact semitoric integrable systems."""

__version__ = "0.1.0"
