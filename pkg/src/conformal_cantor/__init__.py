"""Limit geometries, renormalization and recurrent compact sets for conformal Cantor sets."""

__version__ = "0.1.0"
