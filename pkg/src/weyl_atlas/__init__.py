"""Weyl phase diagrams of parameter-dependent Hermitian matrices."""
__version__ = "0.1.0"
