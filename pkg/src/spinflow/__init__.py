"""Certified spectral computations for monopole Floer homology of hyperbolic rational homology spheres."""

__version__ = "0.1.0"
