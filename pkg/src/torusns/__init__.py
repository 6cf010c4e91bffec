"""Pseudo-spectral toolkit for branching-solution experiments with the
two-dimensional incompressible Navier-Stokes equations on the torus."""

__version__ = "0.1.0"
