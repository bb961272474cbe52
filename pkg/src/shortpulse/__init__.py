"""Numerical laboratory for the regularized short pulse equation and its
dispersion-diffusion limit."""

__version__ = "0.1.0"
