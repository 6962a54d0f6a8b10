"""Pseudo-spectral Hall-MHD simulator and identity-verification harness."""

from .spectral import Grid, ScalarField
from .fields import VectorField
from .mhd import State, SystemSpec

__all__ = ["Grid", "ScalarField", "VectorField", "State", "SystemSpec"]
__version__ = "0.1.0"
