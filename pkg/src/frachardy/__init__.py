"""Numerical laboratory for weighted fractional Hardy inequalities with remainder, 1 < p < 2."""
from .model import FractionalParams, Regime, RegimeError, validate, french_power, coupling

__all__ = ["FractionalParams", "Regime", "RegimeError", "validate", "french_power", "coupling"]
