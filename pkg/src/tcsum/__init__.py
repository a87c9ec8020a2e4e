"""Exact lattice and topology toolkit for twisted connected sum G2-manifolds."""

__version__ = "0.1.0"
