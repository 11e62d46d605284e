"""Abstaining nearest-neighbour classification under random-subspace attacks."""

__version__ = "0.1.0"
