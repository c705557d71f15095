"""Finite-algebra toolkit for multivariate public-key encryption and signatures."""

__version__ = "0.1.0"
