"""Numerical laboratory for the vanishing-viscosity limit of 2D Navier-Stokes."""

__version__ = "0.1.0"
