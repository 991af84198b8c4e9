"""Simulation toolkit for permutation-modulated optical MIMO blocks."""

__version__ = "0.1.0"
