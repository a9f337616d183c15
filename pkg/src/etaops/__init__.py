"""Hecke-type operators on eta-quotients with compatible multiplier systems."""

__version__ = "0.1.0"
