"""Affine-almost-invariant symmetric subsets of F_p: construction and diagnostics."""

__version__ = "0.1.0"
