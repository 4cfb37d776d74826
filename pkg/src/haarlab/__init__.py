"""Haar-perturbed random matrices: invertibility lab and single ring checks."""

__version__ = "0.1.0"
