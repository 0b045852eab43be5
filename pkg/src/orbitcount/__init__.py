"""Counting lattice orbit points in expanding plane regions."""

__version__ = "0.1.0"
