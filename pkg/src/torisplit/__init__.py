"""Resonances of quadratic and cubic frequency vectors and splitting estimates."""

__version__ = "0.1.0"
