"""Probabilistic imaginary-time evolution solvers for advection-diffusion-reaction equations."""
__version__ = "0.1.0"
