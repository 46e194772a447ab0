"""Pseudo-spectral laboratory for singular-drift advection-diffusion equations.

Periodic active scalars with Calderon-Zygmund, SQG, and modified SQG drift
laws, Littlewood-Paley shell diagnostics, Besov and Chemin-Lerner norms,
paraproduct certificates, and exact rational exponent arithmetic.
"""

__version__ = "0.1.0"

from .fields import Grid, RealField, SpectralField, VectorField

__all__ = ["Grid", "RealField", "SpectralField", "VectorField", "__version__"]
