"""Typical densities of random lattices and decimated random packings."""

__version__ = "0.1.0"
